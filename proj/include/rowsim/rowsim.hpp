#pragma once

// Umbrella header for the row-wise accelerator model.

#include "rowsim/hw_config.hpp"
#include "rowsim/qtensor.hpp"
#include "rowsim/layer.hpp"
#include "rowsim/stats.hpp"
#include "rowsim/oracle.hpp"
#include "rowsim/schedule.hpp"
#include "rowsim/pe_array.hpp"
#include "rowsim/scheduler.hpp"
#include "rowsim/memsys.hpp"
#include "rowsim/simulate.hpp"
#include "rowsim/workload.hpp"
#include "rowsim/report.hpp"
#include "rowsim/driver.hpp"
