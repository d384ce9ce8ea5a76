// SPDX-License-Identifier: Apache-2.0
//
// The gatsv command line: gen | train | score | eval | gradcheck.
//
// Exit codes: 0 success, 1 gradcheck failure, 2 usage, 3 data or format
// error, 4 numeric failure.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "gatsv/baselines.hpp"
#include "gatsv/data.hpp"
#include "gatsv/gat.hpp"
#include "gatsv/metrics.hpp"

namespace gatsv::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

enum class Backend { kGat, kCosine, kTta, kBVector };

Backend parse_backend(const std::string& name);

// A loaded scorer; only the member matching `kind` is used.
struct Scorer {
  Backend kind = Backend::kCosine;
  GatModel gat;
  BVectorModel bvector;

  double operator()(const UtteranceSSEs& enroll, const UtteranceSSEs& test) const;
};

// Scores every trial, averaging multi-utterance enrollments. Up to `threads`
// workers; the result does not depend on the thread count. DataError naming
// the trial line for unknown utterance ids.
std::vector<ScoreLine> score_trials(const Scorer& scorer, const Corpus& corpus,
                                    const std::vector<Trial>& trials, std::size_t threads);

// GATV_THREADS if set to a positive integer, else the hardware concurrency.
std::size_t scoring_threads();

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gatsv::cli
