// include/lidkit/gradcheck.h

// Copyright 2026  LIDKit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LIDKIT_GRADCHECK_H_
#define LIDKIT_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace lidkit {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  int coords_checked = 0;
  bool passed = false;
};

// Central finite-difference checks (step 1e-5) for every differentiable op
// and for the composed tiny-preset model, against the given relative-error
// tolerance. Deterministic for a fixed seed.
std::vector<GradCheckResult> run_gradient_checks(std::uint64_t seed,
                                                 double tolerance = 1e-4);

}  // namespace lidkit

#endif  // LIDKIT_GRADCHECK_H_
