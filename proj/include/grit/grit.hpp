#pragma once

#include "grit/common.hpp"
#include "grit/dataset.hpp"
#include "grit/evaluation.hpp"
#include "grit/features.hpp"
#include "grit/geometry.hpp"
#include "grit/inference.hpp"
#include "grit/parallel.hpp"
#include "grit/scenario.hpp"
#include "grit/smtlib.hpp"
#include "grit/synthetic.hpp"
#include "grit/training.hpp"
#include "grit/trajectory.hpp"
#include "grit/tree.hpp"
#include "grit/verification.hpp"
