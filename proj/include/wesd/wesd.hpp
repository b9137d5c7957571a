#pragma once

#include "wesd/distances.hpp"
#include "wesd/eigensolver.hpp"
#include "wesd/embedding.hpp"
#include "wesd/errors.hpp"
#include "wesd/geometry.hpp"
#include "wesd/laplacian.hpp"
#include "wesd/retrieval.hpp"
