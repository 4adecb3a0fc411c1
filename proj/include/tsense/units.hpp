#pragma once

#include <compare>

#include "errors.hpp"

namespace tsense {

inline constexpr double k_boltzmann = 1.380649e-23;    // J/K
inline constexpr double q_electron = 1.602176634e-19;  // C
inline constexpr double zero_celsius_in_kelvin = 273.15;

struct Kelvin;

/// Temperature in degrees Celsius. Public APIs take Celsius; Kelvin is only
/// used where the physics needs absolute temperature.
struct Celsius {
  double value = 0.0;

  constexpr Celsius() = default;
  constexpr explicit Celsius(double v) : value(v) {}

  constexpr Kelvin kelvin() const;
  friend constexpr auto operator<=>(Celsius, Celsius) = default;
};

struct Kelvin {
  double value = 0.0;

  constexpr Kelvin() = default;
  constexpr explicit Kelvin(double v) : value(v) {}

  constexpr Celsius celsius() const { return Celsius{value - zero_celsius_in_kelvin}; }
  friend constexpr auto operator<=>(Kelvin, Kelvin) = default;
};

constexpr Kelvin Celsius::kelvin() const { return Kelvin{value + zero_celsius_in_kelvin}; }

/// k_B*T/q in volts.
inline double thermal_voltage(Kelvin t) {
  if (!(t.value > 0.0)) {
    throw DomainError("thermal_voltage: absolute temperature must be positive");
  }
  return k_boltzmann * t.value / q_electron;
}

inline double thermal_voltage(Celsius t) { return thermal_voltage(t.kelvin()); }

}  // namespace tsense
