/// @file sipllg.hpp
/// @brief Umbrella header for the semi-implicit projection LLG solver.
#pragma once

#include "sipllg/config.hpp"
#include "sipllg/diagnostics.hpp"
#include "sipllg/effective_field.hpp"
#include "sipllg/errors.hpp"
#include "sipllg/experiments.hpp"
#include "sipllg/grid.hpp"
#include "sipllg/grid_ops.hpp"
#include "sipllg/io.hpp"
#include "sipllg/krylov.hpp"
#include "sipllg/preconditioner.hpp"
#include "sipllg/stepper.hpp"
#include "sipllg/vec3.hpp"
