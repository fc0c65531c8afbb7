#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsirecon {

using real = double;

/// Thrown whenever two arrays that must agree in shape do not.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major array of rank 1..4. Rank-3 tensors are H x W x C with the
/// channel index fastest, which is also the on-disk layout of cubes.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, real fill = 0.0);
    Tensor(std::vector<int> shape, std::vector<real> data);

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }
    static Tensor map3(int h, int w, int c, real fill = 0.0) { return Tensor({h, w, c}, fill); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // rank-3 conveniences
    int h() const { return shape_[0]; }
    int w() const { return shape_[1]; }
    int c() const { return shape_[2]; }
    real& at(int i, int j, int k) { return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k]; }
    real at(int i, int j, int k) const { return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k]; }

    real& operator[](std::size_t i) { return data_[i]; }
    real operator[](std::size_t i) const { return data_[i]; }

    std::span<real> span() { return data_; }
    std::span<const real> span() const { return data_; }
    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }
    std::vector<real>& vec() { return data_; }
    const std::vector<real>& vec() const { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

    void fill(real v);
    Tensor& operator+=(const Tensor& o);
    Tensor& operator*=(real s);

private:
    std::vector<int> shape_;
    std::vector<real> data_;
};

std::string shape_str(const std::vector<int>& shape);

/// Throws ShapeError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

real dot(const Tensor& a, const Tensor& b);
real max_abs(const Tensor& t);
real max_abs_diff(const Tensor& a, const Tensor& b);
real l2_norm(const Tensor& t);

}  // namespace hsirecon
