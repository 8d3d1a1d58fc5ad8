#pragma once

// Umbrella header.

#include "rulxai/common.hpp"
#include "rulxai/dataset.hpp"
#include "rulxai/diagnose.hpp"
#include "rulxai/ebm.hpp"
#include "rulxai/explain.hpp"
#include "rulxai/feature_select.hpp"
#include "rulxai/figs.hpp"
#include "rulxai/interpret.hpp"
#include "rulxai/model.hpp"
#include "rulxai/relu_dnn.hpp"
#include "rulxai/rng.hpp"
#include "rulxai/svg.hpp"
#include "rulxai/tree.hpp"
