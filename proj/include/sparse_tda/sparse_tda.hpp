#pragma once

#include "sparse_tda/error.hpp"
#include "sparse_tda/random.hpp"
#include "sparse_tda/diagram.hpp"
#include "sparse_tda/wasserstein.hpp"
#include "sparse_tda/persistence0.hpp"
#include "sparse_tda/pimage.hpp"
#include "sparse_tda/matrix.hpp"
#include "sparse_tda/sparse.hpp"
#include "sparse_tda/svm.hpp"
#include "sparse_tda/linear.hpp"
#include "sparse_tda/pipeline.hpp"
