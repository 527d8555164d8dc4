#include "memsc/numerics/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "memsc/kernels/kernels.hpp"

namespace memsc::numerics {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor Tensor::scalar(double x) {
    Tensor t;
    t.v = {x};
    return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.v.assign(shape_numel(shape), 0.0);
    t.shape = std::move(shape);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.v) x = value;
    return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size())
        throw std::invalid_argument("Tensor::from: value count does not match shape " +
                                    shape_str(shape));
    Tensor t;
    t.shape = std::move(shape);
    t.v = std::move(values);
    return t;
}

Tensor Tensor::gaussian(std::vector<std::size_t> shape, double stddev, Rng& rng) {
    Tensor t = zeros(std::move(shape));
    for (double& x : t.v) x = stddev * rng.normal();
    return t;
}

std::size_t Tensor::rows() const { return rank() == 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const {
    if (rank() == 2) return shape[1];
    if (rank() == 1) return shape[0];
    return 1;
}

bool Tensor::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

const char* param_tag_name(ParamTag tag) {
    switch (tag) {
        case ParamTag::semantic_enc: return "semantic_enc";
        case ParamTag::jsc_enc: return "jsc_enc";
        case ParamTag::jsc_dec: return "jsc_dec";
        case ParamTag::semantic_dec: return "semantic_dec";
        case ParamTag::importance: return "importance";
    }
    return "unknown";
}

ParamTag param_tag_from_name(const std::string& name) {
    if (name == "semantic_enc") return ParamTag::semantic_enc;
    if (name == "jsc_enc") return ParamTag::jsc_enc;
    if (name == "jsc_dec") return ParamTag::jsc_dec;
    if (name == "semantic_dec") return ParamTag::semantic_dec;
    if (name == "importance") return ParamTag::importance;
    throw std::invalid_argument("unknown parameter tag: " + name);
}

void ParameterSet::add(const std::string& name, ParamTag tag, Tensor value) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    entries_.push_back({name, tag, std::move(value)});
}

bool ParameterSet::contains(const std::string& name) const { return index_.count(name) != 0; }

std::size_t ParameterSet::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return it->second;
}

Tensor& ParameterSet::at(const std::string& name) { return entries_[index_of(name)].value; }
const Tensor& ParameterSet::at(const std::string& name) const {
    return entries_[index_of(name)].value;
}
ParamTag ParameterSet::tag_of(const std::string& name) const {
    return entries_[index_of(name)].tag;
}

std::size_t ParameterSet::total_elements() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
}

GradientSet::GradientSet(const ParameterSet& params) {
    names_.reserve(params.size());
    entries_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& e = params.entry(i);
        index_[e.name] = entries_.size();
        names_.push_back(e.name);
        entries_.push_back(Tensor::zeros(e.value.shape));
    }
}

Tensor& GradientSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no gradient named " + name);
    return entries_[it->second];
}

const Tensor& GradientSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no gradient named " + name);
    return entries_[it->second];
}

void GradientSet::zero() {
    for (auto& t : entries_) std::fill(t.v.begin(), t.v.end(), 0.0);
}

void GradientSet::accumulate(const GradientSet& other, double alpha) {
    if (other.size() != size()) throw std::invalid_argument("gradient set key mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (names_[i] != other.names_[i] || !entries_[i].same_shape(other.entries_[i]))
            throw std::invalid_argument("gradient set key/shape mismatch at " + names_[i]);
        kernels::axpy(alpha, other.entries_[i].data(), entries_[i].data(), entries_[i].numel());
    }
}

void GradientSet::scale(double alpha) {
    for (auto& t : entries_) kernels::scal(alpha, t.data(), t.numel());
}

double GradientSet::global_norm() const {
    double acc = 0.0;
    for (const auto& t : entries_) acc += kernels::dot(t.data(), t.data(), t.numel());
    return std::sqrt(acc);
}

bool GradientSet::all_finite() const {
    for (const auto& t : entries_)
        if (!t.all_finite()) return false;
    return true;
}

}  // namespace memsc::numerics
