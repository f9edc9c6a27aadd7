#pragma once

// Umbrella header for the bodyid library: a capsule-body biometric pipeline
// (synthetic bodies, silhouette fitting, shape-feature embedding, view-binned
// matching, gallery/probe evaluation).

#include "bodyid/adam.hpp"
#include "bodyid/aggregation.hpp"
#include "bodyid/body_model.hpp"
#include "bodyid/embedding.hpp"
#include "bodyid/error.hpp"
#include "bodyid/eval.hpp"
#include "bodyid/fitter.hpp"
#include "bodyid/geometry.hpp"
#include "bodyid/io.hpp"
#include "bodyid/kdtree.hpp"
#include "bodyid/losses.hpp"
#include "bodyid/parallel.hpp"
#include "bodyid/rng.hpp"
#include "bodyid/serialize.hpp"
#include "bodyid/silhouette.hpp"
#include "bodyid/synth.hpp"
