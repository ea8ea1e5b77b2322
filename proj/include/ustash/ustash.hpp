#pragma once

#include "ustash/units.hpp"
#include "ustash/io.hpp"
#include "ustash/workload.hpp"
#include "ustash/analytics.hpp"
#include "ustash/model.hpp"
#include "ustash/sim.hpp"
#include "ustash/config.hpp"
#include "ustash/experiment.hpp"
