// Copyright 2026 The corrspace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "corrspace/error.hpp"

namespace corrspace {

/// Resolves stochastic branches, either from a fixed path or by seeded
/// sampling.
///
/// A fixed path is consumed one entry per decision; once exhausted its last
/// entry repeats, so a one-element path forces the same branch every time.
class BranchPicker {
   public:
    static BranchPicker fixed(std::vector<int> path) {
        if (path.empty()) {
            throw Error(ErrorCode::kInvalidArgument, "fixed branch path must not be empty");
        }
        BranchPicker p;
        p.path_ = std::move(path);
        return p;
    }

    static BranchPicker sampled(std::uint64_t seed) {
        BranchPicker p;
        p.sampling_ = true;
        p.rng_.seed(seed);
        return p;
    }

    bool is_sampling() const {
        return sampling_;
    }

    /// Chooses an index into `probabilities`. Forced branches are returned
    /// even if their probability is zero; callers decide what that means.
    int pick(const std::vector<double> &probabilities) {
        if (probabilities.empty()) {
            throw Error(ErrorCode::kInvalidArgument, "no branches to pick from");
        }
        if (!sampling_) {
            int choice = path_[std::min(cursor_, path_.size() - 1)];
            ++cursor_;
            if (choice < 0 || choice >= static_cast<int>(probabilities.size())) {
                throw Error(ErrorCode::kInvalidArgument, "forced branch index out of range");
            }
            return choice;
        }
        double total = 0;
        for (double p : probabilities) {
            total += p;
        }
        double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53 * total;
        double acc = 0;
        int last_nonzero = 0;
        for (size_t i = 0; i < probabilities.size(); ++i) {
            if (probabilities[i] > 0) {
                last_nonzero = static_cast<int>(i);
            }
            acc += probabilities[i];
            if (u < acc) {
                return static_cast<int>(i);
            }
        }
        return last_nonzero;
    }

   private:
    BranchPicker() = default;

    bool sampling_ = false;
    std::vector<int> path_;
    size_t cursor_ = 0;
    std::mt19937_64 rng_;
};

}  // namespace corrspace
