#pragma once

// Umbrella header.

#include "campaign.hpp"
#include "canonical.hpp"
#include "cfc.hpp"
#include "config_io.hpp"
#include "device_model.hpp"
#include "errors.hpp"
#include "fdc.hpp"
#include "fitting.hpp"
#include "frontend.hpp"
#include "lm.hpp"
#include "metrology.hpp"
#include "population.hpp"
#include "seeds.hpp"
#include "sensor.hpp"
#include "stats.hpp"
#include "table.hpp"
#include "units.hpp"
#include "variation.hpp"
