#pragma once

// Umbrella header.

#include "hetcon/errors.hpp"
#include "hetcon/metric.hpp"
#include "hetcon/potentials.hpp"
#include "hetcon/optimize.hpp"
#include "hetcon/geodesic.hpp"
#include "hetcon/sti.hpp"
#include "hetcon/heteroclinic.hpp"
#include "hetcon/grid_function.hpp"
#include "hetcon/field.hpp"
#include "hetcon/funnel.hpp"
#include "hetcon/mollify.hpp"
#include "hetcon/translation.hpp"
#include "hetcon/double_connection.hpp"
#include "hetcon/counterexample.hpp"
#include "hetcon/regularity.hpp"
#include "hetcon/io.hpp"
