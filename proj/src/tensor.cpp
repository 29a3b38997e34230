#include "finde/tensor.hpp"

#include <sstream>

namespace finde {

std::string Tensor::shape_str() const {
  std::ostringstream oss;
  if (rank == 0) {
    oss << "()";
  } else if (rank == 1) {
    oss << "(" << d0 << ")";
  } else {
    oss << "(" << d0 << "x" << d1 << ")";
  }
  return oss.str();
}

Tensor zeros_like(const Tensor& t) {
  Tensor z = t;
  z.data.setZero();
  return z;
}

}  // namespace finde
