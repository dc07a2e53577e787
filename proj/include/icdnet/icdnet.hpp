// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "icdnet/autodiff.hpp"
#include "icdnet/checkpoint.hpp"
#include "icdnet/corpus.hpp"
#include "icdnet/embeddings.hpp"
#include "icdnet/error.hpp"
#include "icdnet/experiment.hpp"
#include "icdnet/icd.hpp"
#include "icdnet/metrics.hpp"
#include "icdnet/models.hpp"
#include "icdnet/ops.hpp"
#include "icdnet/optim.hpp"
#include "icdnet/rng.hpp"
#include "icdnet/run.hpp"
#include "icdnet/synthetic.hpp"
#include "icdnet/tensor.hpp"
#include "icdnet/text.hpp"
#include "icdnet/training.hpp"
