#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace veripatient::noise {

/// The six controllable patient-communication barrier dimensions.
enum class NoisePillar {
    memory_recall,
    health_literacy,
    emotional_state,
    communication_style,
    social_cultural,
    cognitive_processing,
};

inline constexpr std::array<NoisePillar, 6> kAllPillars = {
    NoisePillar::memory_recall,      NoisePillar::health_literacy,
    NoisePillar::emotional_state,    NoisePillar::communication_style,
    NoisePillar::social_cultural,    NoisePillar::cognitive_processing,
};

inline constexpr int kMinLevel = 0;
inline constexpr int kMaxLevel = 4;

/// Canonical snake_case identifier, stable across serialization.
std::string_view pillar_id(NoisePillar pillar);

/// Human-readable name used in rendered prompt blocks.
std::string_view pillar_display_name(NoisePillar pillar);

std::optional<NoisePillar> pillar_from_id(std::string_view id);

/// One (pillar, level) behavioral constraint.
struct NoiseSpec {
    NoisePillar pillar;
    int level = 0;

    bool operator==(const NoiseSpec&) const = default;
};

/// Ordered set of constraints for one patient. An empty list denotes the
/// clean (all-ideal) condition.
struct NoiseProfile {
    std::vector<NoiseSpec> specs;

    bool empty() const { return specs.empty(); }
    bool operator==(const NoiseProfile&) const = default;
};

enum class ProfileMode { standard, ablation };

enum class ProfileViolation { duplicate_pillar, level_out_of_protocol, count_mismatch };

std::string_view violation_name(ProfileViolation v);

/// Behavioral description injected into the patient prompt for the given
/// pillar and severity level. Throws std::out_of_range for levels
/// outside 0-4.
const std::string& behavior_text(NoisePillar pillar, int level);

/// Standard mode enforces exactly 2 distinct pillars with levels in
/// {1,2,3}; ablation mode permits 0-6 pillars at levels 0-4. Duplicate
/// pillars are rejected in both modes. Empty result means valid.
std::vector<ProfileViolation> validate_profile(const NoiseProfile& profile, ProfileMode mode);

/// Deterministic standard-protocol profile for a seed: two distinct
/// pillars drawn uniformly without replacement, levels uniform over
/// {1,2,3}.
NoiseProfile sample_profile(std::uint64_t seed);

/// The [NOISE PROFILE] section of the patient prompt, one bullet per
/// spec. An empty profile renders all six pillars at their level-0
/// (ideal) text so the prompt shape matches noisy runs.
std::string render_profile_block(const NoiseProfile& profile);

/// Compact one-line summary, e.g. "health_literacy L3 + emotional_state L2"
/// ("clean" for the empty profile). Used in verifier/judge prompts.
std::string profile_summary(const NoiseProfile& profile);

} // namespace veripatient::noise
