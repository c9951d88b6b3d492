#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace bandbridge::ag {

inline constexpr std::size_t kMaxRank = 4;

// Tensor extents, rank 0 (scalar) through 4. Images use N x C x H x W.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t numel() const noexcept;

  bool operator==(const Shape&) const = default;

  std::string str() const;

 private:
  void validate() const;

  std::vector<std::size_t> dims_;
};

}  // namespace bandbridge::ag
