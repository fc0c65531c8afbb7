#include "hsirecon/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace hsirecon {

namespace {

std::size_t element_count(const std::vector<int>& shape)
{
    if (shape.empty() || shape.size() > 4) throw ShapeError("tensor rank must be 1..4, got " + std::to_string(shape.size()));
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 1) throw ShapeError("tensor dimensions must be positive: " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, real fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<real> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (element_count(shape_) != data_.size())
        throw ShapeError("payload of " + std::to_string(data_.size()) + " values does not fit shape " + hsirecon::shape_str(shape_));
}

std::string shape_str(const std::vector<int>& shape)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ')';
    return os.str();
}

std::string Tensor::shape_str() const { return hsirecon::shape_str(shape_); }

void Tensor::fill(real v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& o)
{
    require_same_shape(*this, o, "tensor +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(real s)
{
    for (auto& v : data_) v *= s;
    return *this;
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what)
{
    if (!a.same_shape(b)) throw ShapeError(what + ": shape " + a.shape_str() + " does not match " + b.shape_str());
}

real dot(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "dot");
    return std::inner_product(a.vec().begin(), a.vec().end(), b.vec().begin(), real{0});
}

real max_abs(const Tensor& t)
{
    real m = 0;
    for (real v : t.vec()) m = std::max(m, std::abs(v));
    return m;
}

real max_abs_diff(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "max_abs_diff");
    real m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

real l2_norm(const Tensor& t) { return std::sqrt(dot(t, t)); }

}  // namespace hsirecon
