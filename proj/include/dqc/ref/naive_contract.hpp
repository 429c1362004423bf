#pragma once

#include "dqc/tensor.hpp"

namespace dqc::ref {

// Direct nested-loop contraction with the same label semantics as
// dqc::contract. Exponentially slower on purpose: it shares no permutation
// or matrix-product code with the main path, so the two can check each
// other.
DenseTensor contract_naive(
    const DenseTensor& a, const DenseTensor& b,
    const std::vector<std::pair<std::string, std::string>>& pairs);

}  // namespace dqc::ref
