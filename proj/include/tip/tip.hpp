#pragma once

// Umbrella include for the translational-impact-prediction library.
//
// The pipeline turns publication metadata, concept annotations and abstract
// embeddings into a gradient-boosted prediction of whether a paper will be
// cited by a patent or a clinical trial, plus the evaluation and temporal
// robustness reports that go with it.

#include "tip/corpus.hpp"
#include "tip/embed.hpp"
#include "tip/errors.hpp"
#include "tip/eval.hpp"
#include "tip/feature_io.hpp"
#include "tip/features.hpp"
#include "tip/gbdt.hpp"
#include "tip/matrix.hpp"
#include "tip/pipeline.hpp"
#include "tip/record.hpp"
#include "tip/rng.hpp"
#include "tip/sampling.hpp"
#include "tip/stats.hpp"
#include "tip/svg.hpp"
#include "tip/synth.hpp"
#include "tip/temporal.hpp"
#include "tip/tsvd.hpp"

namespace tip {
inline constexpr const char* kVersion = "0.1.0";
}
