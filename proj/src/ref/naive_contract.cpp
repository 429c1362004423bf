#include "dqc/ref/naive_contract.hpp"

namespace dqc::ref {

namespace {

// Odometer-style walk over a multi-index.
bool advance(std::vector<std::size_t>& idx,
             const std::vector<std::size_t>& shape) {
  for (std::size_t k = shape.size(); k-- > 0;) {
    if (++idx[k] < shape[k]) return true;
    idx[k] = 0;
  }
  return false;
}

}  // namespace

DenseTensor contract_naive(
    const DenseTensor& a, const DenseTensor& b,
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
  std::vector<std::size_t> a_contr, b_contr;
  for (const auto& [la, lb] : pairs) {
    const std::size_t ia = a.axis(la), ib = b.axis(lb);
    if (a_used[ia] || b_used[ib])
      throw ShapeError("label contracted twice");
    if (a.shape()[ia] != b.shape()[ib])
      throw ShapeError("contracted extents differ");
    a_used[ia] = true;
    b_used[ib] = true;
    a_contr.push_back(ia);
    b_contr.push_back(ib);
  }

  std::vector<std::size_t> a_free, b_free;
  std::vector<std::size_t> shape;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (!a_used[i]) {
      a_free.push_back(i);
      shape.push_back(a.shape()[i]);
      labels.push_back(a.labels()[i]);
    }
  for (std::size_t i = 0; i < b.rank(); ++i)
    if (!b_used[i]) {
      b_free.push_back(i);
      shape.push_back(b.shape()[i]);
      labels.push_back(b.labels()[i]);
    }

  DenseTensor out(shape, labels);

  std::vector<std::size_t> contr_shape;
  for (auto i : a_contr) contr_shape.push_back(a.shape()[i]);

  std::vector<std::size_t> out_idx(shape.size(), 0);
  std::vector<std::size_t> ai(a.rank(), 0), bi(b.rank(), 0);
  std::size_t flat = 0;
  do {
    for (std::size_t k = 0; k < a_free.size(); ++k)
      ai[a_free[k]] = out_idx[k];
    for (std::size_t k = 0; k < b_free.size(); ++k)
      bi[b_free[k]] = out_idx[a_free.size() + k];

    Complex acc{0.0, 0.0};
    std::vector<std::size_t> ci(contr_shape.size(), 0);
    do {
      for (std::size_t k = 0; k < ci.size(); ++k) {
        ai[a_contr[k]] = ci[k];
        bi[b_contr[k]] = ci[k];
      }
      acc += a.at(ai) * b.at(bi);
    } while (!ci.empty() && advance(ci, contr_shape));
    out[flat++] = acc;
  } while (!out_idx.empty() && advance(out_idx, shape));

  return out;
}

}  // namespace dqc::ref
