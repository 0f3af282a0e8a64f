#pragma once

// Umbrella header. io.hpp is separate because it needs the vendored JSON parser.

#include "latentforest/error.hpp"
#include "latentforest/rational.hpp"
#include "latentforest/forest.hpp"
#include "latentforest/monomial.hpp"
#include "latentforest/forest_rlct.hpp"
#include "latentforest/rlct_engine.hpp"
#include "latentforest/lattice.hpp"
#include "latentforest/gaussian.hpp"
#include "latentforest/selection.hpp"
#include "latentforest/laplace.hpp"
#include "latentforest/simulation.hpp"
