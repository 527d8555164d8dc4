#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "memsc/rng.hpp"

namespace memsc::numerics {

// Dense row-major tensor of doubles. Rank 0 (scalar), 1 and 2 are the only
// ranks this project needs. Tensors are plain values; operations never alias.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> v;

    Tensor() = default;
    static Tensor scalar(double x);
    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values);
    // i.i.d. Gaussian entries, mean 0, given standard deviation
    static Tensor gaussian(std::vector<std::size_t> shape, double stddev, Rng& rng);

    std::size_t numel() const { return v.size(); }
    std::size_t rank() const { return shape.size(); }
    // rank-2 accessors; rank-1 tensors behave as a single row
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator()(std::size_t i) { return v[i]; }
    double operator()(std::size_t i) const { return v[i]; }
    double& operator()(std::size_t r, std::size_t c) { return v[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v[r * cols() + c]; }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

// Component a parameter belongs to. Mirrors the five trainable blocks of the
// transceiver: sentence encoder, channel encoder/decoder pair, answer decoder,
// and the importance scorer used for masking.
enum class ParamTag { semantic_enc, jsc_enc, jsc_dec, semantic_dec, importance };

const char* param_tag_name(ParamTag tag);
ParamTag param_tag_from_name(const std::string& name);

// Named, ordered, shape-frozen collection of trainable tensors.
class ParameterSet {
public:
    struct Entry {
        std::string name;
        ParamTag tag;
        Tensor value;
    };

    // Throws if the name already exists.
    void add(const std::string& name, ParamTag tag, Tensor value);
    bool contains(const std::string& name) const;
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    ParamTag tag_of(const std::string& name) const;

    std::size_t size() const { return entries_.size(); }
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    Entry& entry(std::size_t i) { return entries_[i]; }
    std::size_t index_of(const std::string& name) const;

    std::size_t total_elements() const;

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Gradients with the same keys and shapes as the ParameterSet they differentiate.
class GradientSet {
public:
    GradientSet() = default;
    explicit GradientSet(const ParameterSet& params);  // zero-initialized

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    std::size_t size() const { return entries_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    Tensor& tensor(std::size_t i) { return entries_[i]; }
    const Tensor& tensor(std::size_t i) const { return entries_[i]; }

    void zero();
    // this += alpha * other (key/shape parity required)
    void accumulate(const GradientSet& other, double alpha = 1.0);
    void scale(double alpha);
    double global_norm() const;
    bool all_finite() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace memsc::numerics
