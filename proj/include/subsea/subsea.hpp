#pragma once

// Umbrella header.
#include "subsea/bayesfilter.hpp"
#include "subsea/curvefit.hpp"
#include "subsea/econ.hpp"
#include "subsea/environment.hpp"
#include "subsea/grid.hpp"
#include "subsea/kinematics.hpp"
#include "subsea/planner.hpp"
#include "subsea/probgrid.hpp"
#include "subsea/scenario.hpp"
