#pragma once

#include "symentropy/error.hpp"
#include "symentropy/parallel.hpp"
#include "symentropy/density_model.hpp"
#include "symentropy/gaussian_mixture.hpp"
#include "symentropy/linalg_bases.hpp"
#include "symentropy/quadrature.hpp"
#include "symentropy/knn.hpp"
#include "symentropy/estimators.hpp"
#include "symentropy/heat_flow.hpp"
#include "symentropy/harness.hpp"
#include "symentropy/fixtures.hpp"
#include "symentropy/io.hpp"
#include "symentropy/calibration.hpp"
