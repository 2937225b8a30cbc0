#pragma once

// Umbrella header: hyperparameter selection for manifold-regularized
// semi-supervised learning, with exact t-fold CV and its single-training
// influence-function approximation.

#include "mancv/bif.hpp"
#include "mancv/commands.hpp"
#include "mancv/cv.hpp"
#include "mancv/dataset.hpp"
#include "mancv/errors.hpp"
#include "mancv/folds.hpp"
#include "mancv/graph.hpp"
#include "mancv/kernels.hpp"
#include "mancv/losses.hpp"
#include "mancv/lowrank.hpp"
#include "mancv/model_select.hpp"
#include "mancv/synth.hpp"
#include "mancv/trainers.hpp"
#include "mancv/util.hpp"
