#pragma once

#include <cstdint>
#include <string_view>

namespace chda {

/// Counter-based deterministic random stream.
///
/// Output n of a stream is mix(key + n * GAMMA) where mix is the SplitMix64
/// finalizer (Steele, Lea & Flood 2014) and the key is derived from
/// (seed, stream_id). Draws depend only on (seed, stream_id, counter), so a
/// stream can be checkpointed, restored, and forked without shared state.
/// Forked child streams hash a label into a new stream_id; distinct labels
/// give statistically independent sequences.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), counter_(0) {
        key_ = mix64(mix64(seed + kGamma) ^ mix64(stream_id + kStreamSalt));
    }

    /// Child stream deterministic in (this stream's identity, label).
    /// The parent is not advanced.
    RngStream fork(std::string_view label) const {
        RngStream child(seed_, mix64(stream_id_ ^ fnv1a64(label)));
        return child;
    }
    RngStream fork(std::uint64_t index) const {
        RngStream child(seed_, mix64(stream_id_ ^ mix64(index + kForkSalt)));
        return child;
    }

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGamma); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (cosine branch); consumes exactly two
    /// u64 draws per call, keeping the counter a complete state description.
    double normal();

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t counter() const { return counter_; }

    /// Rebuild a stream at an exact position (checkpoint restore).
    static RngStream restore(std::uint64_t seed, std::uint64_t stream_id,
                             std::uint64_t counter) {
        RngStream s(seed, stream_id);
        s.counter_ = counter;
        return s;
    }

    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t fnv1a64(std::string_view s) {
        std::uint64_t h = 14695981039346656037ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return h;
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kStreamSalt = 0x6A09E667F3BCC909ULL;
    static constexpr std::uint64_t kForkSalt = 0xB7E151628AED2A6BULL;

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_;
    std::uint64_t key_;
};

}  // namespace chda
