// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the awbtree Project.

#pragma once

#include "chroma.hpp"
#include "dataset.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "features.hpp"
#include "image.hpp"
#include "minimize.hpp"
#include "model_io.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "study.hpp"
#include "synth.hpp"
#include "tree.hpp"
