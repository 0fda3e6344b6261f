#pragma once

// Umbrella header for the RBF-FD surface Laplacian library.

#include "rbffd/errors.hpp"
#include "rbffd/kdtree.hpp"
#include "rbffd/geometry.hpp"
#include "rbffd/kernel.hpp"
#include "rbffd/rbf_core.hpp"
#include "rbffd/shape_param.hpp"
#include "rbffd/sparse.hpp"
#include "rbffd/operator.hpp"
#include "rbffd/linear_solvers.hpp"
#include "rbffd/timestepping.hpp"
#include "rbffd/spherical_harmonics.hpp"
#include "rbffd/problems.hpp"
#include "rbffd/convergence.hpp"
#include "rbffd/config.hpp"
