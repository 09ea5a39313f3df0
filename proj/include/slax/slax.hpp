#pragma once

#include "slax/config.hpp"
#include "slax/contour.hpp"
#include "slax/cse.hpp"
#include "slax/dataset.hpp"
#include "slax/decompose.hpp"
#include "slax/error.hpp"
#include "slax/experiment.hpp"
#include "slax/ground_truth.hpp"
#include "slax/losses.hpp"
#include "slax/mlp.hpp"
#include "slax/model_io.hpp"
#include "slax/po.hpp"
#include "slax/rng.hpp"
#include "slax/simplex.hpp"
#include "slax/slo.hpp"
#include "slax/train.hpp"
