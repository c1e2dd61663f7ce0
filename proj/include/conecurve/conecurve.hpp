#pragma once

#include "closed_form.hpp"
#include "cone_geometry.hpp"
#include "errors.hpp"
#include "flow_evolution.hpp"
#include "minkowski.hpp"
#include "ode.hpp"
#include "reduced_system.hpp"
#include "simulation.hpp"
