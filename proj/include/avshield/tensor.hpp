#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "avshield/error.hpp"

namespace avshield {

// Dense row-major tensor of doubles with shared storage. Values are treated
// as immutable once wrapped into an autograd node; mutation is reserved for
// optimizer updates between graphs.
class Tensor {
public:
    Tensor() : data_(std::make_shared<std::vector<double>>()) {}

    explicit Tensor(std::vector<int> shape, double fill = 0.0) : shape_(std::move(shape)) {
        data_ = std::make_shared<std::vector<double>>(count(shape_), fill);
    }

    static Tensor from(std::vector<int> shape, std::vector<double> values) {
        if (count(shape) != static_cast<std::int64_t>(values.size()))
            throw InputError("tensor shape does not match value count");
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = std::make_shared<std::vector<double>>(std::move(values));
        return t;
    }

    static Tensor scalar(double v) { return from({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_->size()); }
    bool empty() const { return data_->empty(); }

    double* data() { return data_->data(); }
    const double* data() const { return data_->data(); }

    double operator[](std::int64_t i) const { return (*data_)[i]; }
    double& operator[](std::int64_t i) { return (*data_)[i]; }

    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }

    Tensor clone() const {
        Tensor t;
        t.shape_ = shape_;
        t.data_ = std::make_shared<std::vector<double>>(*data_);
        return t;
    }

    Tensor reshaped(std::vector<int> shape) const {
        if (count(shape) != size()) throw InputError("reshape element count mismatch");
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    void fill(double v) { std::fill(data_->begin(), data_->end(), v); }

    static std::int64_t count(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }

private:
    std::vector<int> shape_;
    std::shared_ptr<std::vector<double>> data_;
};

} // namespace avshield
