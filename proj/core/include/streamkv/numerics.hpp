#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace streamkv {

// Dense 64-bit float vector. All reductions over these run in fixed
// left-to-right order so repeated runs are bit-identical.
using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double l2_distance(const Vector& a, const Vector& b);
bool all_finite(const Vector& a);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scaled(const Vector& a, double s);

/// ⟨a,b⟩ / (‖a‖·‖b‖). Throws std::invalid_argument on dimension mismatch
/// and std::domain_error if either input has zero norm.
double cosine_similarity(const Vector& a, const Vector& b);

/// Numerically stable softmax (max-subtraction). Output sums to 1.
Vector softmax(const Vector& scores);

/// softmax(q·kᵀ · scale) for each key, in key order.
Vector attention_weights(const Vector& query, std::span<const Vector> keys, double scale);

/// Σ weights[i]·values[i], fixed order.
Vector weighted_sum(std::span<const Vector> values, const Vector& weights);

/// softmax(q·Kᵀ·scale)·V. Throws on an empty key list; callers must
/// guarantee at least one cached entry.
Vector scaled_dot_attention(const Vector& query, std::span<const Vector> keys,
                            std::span<const Vector> values, double scale);

/// Mean over a frame's token vectors; the canonical frame-level embedding
/// used for every similarity decision.
Vector mean_pool(std::span<const Vector> tokens);

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c);

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    /// Matrix-vector product, fixed accumulation order.
    Vector apply(const Vector& x) const;
};

/// One frame of the stream: a fixed number of token embeddings plus the
/// absolute step index it was generated at.
struct LatentFrame {
    std::vector<Vector> tokens;
    std::uint64_t frame_index = 0;
};

}  // namespace streamkv
