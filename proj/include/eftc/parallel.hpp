#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace eftc {

/// Upper bound on worker threads used by parallel_for. 0 restores the
/// default (hardware concurrency). Results never depend on this value.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Each index is processed exactly once;
/// callers write into pre-sized per-index slots so output order is fixed.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Deterministic seed derivation (splitmix64 mixing of a parent seed and a
/// stream index). Used to key per-tree, per-run and per-curve RNG streams.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept;

}  // namespace eftc
