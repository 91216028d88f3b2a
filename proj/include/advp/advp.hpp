#ifndef ADVP_ADVP_HPP
#define ADVP_ADVP_HPP

#include "advp/attack/baselines.hpp"
#include "advp/attack/greedy.hpp"
#include "advp/attack/objective.hpp"
#include "advp/attack/result.hpp"
#include "advp/errors.hpp"
#include "advp/io/atomic_file.hpp"
#include "advp/io/config.hpp"
#include "advp/io/csv.hpp"
#include "advp/io/datasets.hpp"
#include "advp/io/pnm.hpp"
#include "advp/nn/architectures.hpp"
#include "advp/nn/network.hpp"
#include "advp/nn/train.hpp"
#include "advp/nn/weights_io.hpp"
#include "advp/perception.hpp"
#include "advp/rng.hpp"
#include "advp/robustness.hpp"
#include "advp/tensor.hpp"
#include "advp/transforms.hpp"

#endif  // ADVP_ADVP_HPP
