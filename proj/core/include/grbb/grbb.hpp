#pragma once

#include "grbb/boosting.hpp"
#include "grbb/csv.hpp"
#include "grbb/dataset.hpp"
#include "grbb/eval.hpp"
#include "grbb/graph.hpp"
#include "grbb/model_file.hpp"
#include "grbb/rng.hpp"
#include "grbb/synthetic.hpp"
#include "grbb/tree.hpp"
#include "grbb/variance.hpp"
