#pragma once

#include <complex>

namespace friable::detail {

// Compensated summation; T is a floating type or std::complex of one.
template <typename T>
class KahanSum {
 public:
  void add(T x) {
    T y = x - carry_;
    T t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  KahanSum& operator+=(T x) {
    add(x);
    return *this;
  }
  T value() const { return sum_; }

 private:
  T sum_{};
  T carry_{};
};

}  // namespace friable::detail
