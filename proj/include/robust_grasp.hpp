#pragma once

#include "robust_grasp/rng.hpp"
#include "robust_grasp/hash.hpp"
#include "robust_grasp/core.hpp"
#include "robust_grasp/config.hpp"
#include "robust_grasp/simworld.hpp"
#include "robust_grasp/nn.hpp"
#include "robust_grasp/optim.hpp"
#include "robust_grasp/model.hpp"
#include "robust_grasp/checkpoint.hpp"
#include "robust_grasp/training.hpp"
#include "robust_grasp/collector.hpp"
#include "robust_grasp/dataset_io.hpp"
#include "robust_grasp/report.hpp"
