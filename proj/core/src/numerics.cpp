#include "streamkv/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace streamkv {

namespace {
void check_same_dim(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    }
}
}  // namespace

double dot(const Vector& a, const Vector& b) {
    check_same_dim(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

double l2_distance(const Vector& a, const Vector& b) {
    check_same_dim(a, b, "l2_distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

bool all_finite(const Vector& a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

Vector add(const Vector& a, const Vector& b) {
    check_same_dim(a, b, "add");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vector sub(const Vector& a, const Vector& b) {
    check_same_dim(a, b, "sub");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Vector scaled(const Vector& a, double s) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

double cosine_similarity(const Vector& a, const Vector& b) {
    check_same_dim(a, b, "cosine_similarity");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw std::domain_error("cosine_similarity: zero-norm input");
    }
    return dot(a, b) / (na * nb);
}

Vector softmax(const Vector& scores) {
    if (scores.empty()) throw std::invalid_argument("softmax: empty input");
    const double m = *std::max_element(scores.begin(), scores.end());
    Vector out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - m);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

Vector attention_weights(const Vector& query, std::span<const Vector> keys, double scale) {
    if (keys.empty()) throw std::invalid_argument("attention_weights: no keys");
    Vector scores(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) scores[i] = dot(query, keys[i]) * scale;
    return softmax(scores);
}

Vector weighted_sum(std::span<const Vector> values, const Vector& weights) {
    if (values.size() != weights.size()) {
        throw std::invalid_argument("weighted_sum: size mismatch");
    }
    if (values.empty()) throw std::invalid_argument("weighted_sum: empty input");
    Vector out(values[0].size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Vector& v = values[i];
        if (v.size() != out.size()) throw std::invalid_argument("weighted_sum: ragged values");
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += weights[i] * v[d];
    }
    return out;
}

Vector scaled_dot_attention(const Vector& query, std::span<const Vector> keys,
                            std::span<const Vector> values, double scale) {
    if (keys.size() != values.size()) {
        throw std::invalid_argument("scaled_dot_attention: keys/values size mismatch");
    }
    const Vector w = attention_weights(query, keys, scale);
    return weighted_sum(values, w);
}

Vector mean_pool(std::span<const Vector> tokens) {
    if (tokens.empty()) throw std::invalid_argument("mean_pool: empty input");
    Vector out(tokens[0].size(), 0.0);
    for (const Vector& t : tokens) {
        if (t.size() != out.size()) throw std::invalid_argument("mean_pool: ragged tokens");
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += t[d];
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (double& v : out) v *= inv;
    return out;
}

Matrix::Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

Vector Matrix::apply(const Vector& x) const {
    if (x.size() != cols) throw std::invalid_argument("Matrix::apply: dimension mismatch");
    Vector out(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = data.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
    return out;
}

}  // namespace streamkv
