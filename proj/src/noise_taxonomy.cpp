#include "veripatient/noise_taxonomy.hpp"

#include <stdexcept>

#include "veripatient/text_util.hpp"

namespace veripatient::noise {

namespace {

// 6 pillars x 5 severity levels of behavioral instructions for the
// patient simulator. Level 0 is ideal behavior, level 4 extreme
// impairment.
const std::array<std::array<std::string, 5>, 6> kBehaviorTable = {{
    // memory_recall
    {{
        "You remember everything accurately with exact dates and times. When asked about "
        "symptom onset, provide precise information.",
        "You occasionally forget minor details. You are slightly uncertain about exact timing "
        "but can approximate within a day or two.",
        "You often forget details and are vague about dates. Use phrases like 'maybe a few "
        "weeks ago' or 'sometime last month'.",
        "You have major memory gaps with a confused timeline. You may mix up the order of "
        "events or combine separate episodes.",
        "You forget most things and are completely disoriented about time. You cannot reliably "
        "sequence events or estimate durations.",
    }},
    // health_literacy
    {{
        "Use correct medical terminology and precise anatomical descriptions. Say 'epigastric "
        "pain' not 'stomach ache'.",
        "Use mostly accurate descriptions with occasional medical terms. You understand basic "
        "anatomy and can follow medical explanations.",
        "Use common words only. Say 'stomach' for any abdominal area, 'sugar' for diabetes. "
        "Struggle with medical jargon.",
        "Use very basic words, point vaguely to body areas. Struggle with numbers and cannot "
        "describe severity precisely.",
        "Cannot describe locations clearly. No numerical concepts for duration or intensity. "
        "May use gestures or metaphors instead of words.",
    }},
    // emotional_state
    {{
        "Report symptoms calmly and objectively without emotional coloring. Describe pain as "
        "'mild discomfort' if appropriate.",
        "Show slight worry. Occasionally emphasize symptoms mildly. Express concern about what "
        "symptoms might mean.",
        "Clearly worried. Tend to assume symptoms mean something serious. Use words like "
        "'worried' or 'concerned' frequently.",
        "Very anxious with catastrophic thinking. Significantly amplify all symptoms. Jump to "
        "worst-case scenarios.",
        "Extreme panic. Convinced something terrible is happening. Use phrases like 'I'm "
        "dying' or 'This is the worst pain ever'.",
    }},
    // communication_style
    {{
        "Give direct, relevant answers with appropriate level of detail. Stay focused on the "
        "question asked.",
        "Provide extra context and stories. Occasionally go slightly off-topic but return to "
        "the main point.",
        "Give long-winded responses. Bury important information in tangential stories about "
        "family or work.",
        "Very difficult to get direct answers. Constantly change subject. Require multiple "
        "redirections to stay on topic.",
        "Extremely disorganized speech. Cannot maintain topic. Give incomplete answers and "
        "jump between unrelated subjects.",
    }},
    // social_cultural
    {{
        "Share all information openly without any hesitation. Disclose sensitive information "
        "(alcohol, drugs, sexual history) immediately.",
        "Usually open. Minor hesitation only on very sensitive topics. Will share after brief "
        "pause or gentle probing.",
        "Selective disclosure. Avoid topics you find embarrassing. Minimize frequency or "
        "severity of stigmatized behaviors.",
        "Share minimal information. Initially deny stigmatized behaviors (alcohol, drugs, "
        "etc.). Only admit after empathetic probing.",
        "Extreme reluctance to share. May provide false information to hide truth. Require "
        "extensive rapport-building before disclosure.",
    }},
    // cognitive_processing
    {{
        "Consider all possibilities equally. Open to any diagnosis. Do not mention internet "
        "research or preconceived notions.",
        "Slight preference for your own beliefs. Mention internet research casually. Accept "
        "alternative explanations readily.",
        "Convinced of a specific diagnosis from Google. Mention it frequently. Still willing "
        "to consider alternatives if explained.",
        "Strongly insist on your self-diagnosis. Dismiss contradicting information. Request "
        "specific tests you read about online.",
        "Completely fixed belief. Reject all alternative explanations aggressively. Accuse "
        "doctor of incompetence if they disagree.",
    }},
}};

constexpr std::array<std::string_view, 6> kPillarIds = {
    "memory_recall",  "health_literacy", "emotional_state",
    "communication_style", "social_cultural", "cognitive_processing",
};

constexpr std::array<std::string_view, 6> kPillarNames = {
    "Memory & Recall",  "Health Literacy", "Emotional State",
    "Communication Style", "Social-Cultural", "Cognitive Processing",
};

} // namespace

std::string_view pillar_id(NoisePillar pillar) {
    return kPillarIds[static_cast<size_t>(pillar)];
}

std::string_view pillar_display_name(NoisePillar pillar) {
    return kPillarNames[static_cast<size_t>(pillar)];
}

std::optional<NoisePillar> pillar_from_id(std::string_view id) {
    for (size_t i = 0; i < kPillarIds.size(); ++i) {
        if (kPillarIds[i] == id) return static_cast<NoisePillar>(i);
    }
    return std::nullopt;
}

std::string_view violation_name(ProfileViolation v) {
    switch (v) {
    case ProfileViolation::duplicate_pillar: return "duplicate_pillar";
    case ProfileViolation::level_out_of_protocol: return "level_out_of_protocol";
    case ProfileViolation::count_mismatch: return "count_mismatch";
    }
    return "unknown";
}

const std::string& behavior_text(NoisePillar pillar, int level) {
    if (level < kMinLevel || level > kMaxLevel) {
        throw std::out_of_range("noise level out of range (0-4): " + std::to_string(level));
    }
    return kBehaviorTable[static_cast<size_t>(pillar)][static_cast<size_t>(level)];
}

std::vector<ProfileViolation> validate_profile(const NoiseProfile& profile, ProfileMode mode) {
    std::vector<ProfileViolation> violations;

    bool duplicate = false;
    for (size_t i = 0; i < profile.specs.size() && !duplicate; ++i) {
        for (size_t j = i + 1; j < profile.specs.size(); ++j) {
            if (profile.specs[i].pillar == profile.specs[j].pillar) {
                duplicate = true;
                break;
            }
        }
    }
    if (duplicate) violations.push_back(ProfileViolation::duplicate_pillar);

    const int lo = (mode == ProfileMode::standard) ? 1 : kMinLevel;
    const int hi = (mode == ProfileMode::standard) ? 3 : kMaxLevel;
    for (const NoiseSpec& spec : profile.specs) {
        if (spec.level < lo || spec.level > hi) {
            violations.push_back(ProfileViolation::level_out_of_protocol);
            break;
        }
    }

    if (mode == ProfileMode::standard && profile.specs.size() != 2) {
        violations.push_back(ProfileViolation::count_mismatch);
    }
    return violations;
}

NoiseProfile sample_profile(std::uint64_t seed) {
    std::uint64_t state = seed;
    // A couple of warmup steps so small seeds do not share low-entropy
    // prefixes.
    text::splitmix64(state);
    text::splitmix64(state);

    // Two distinct pillars without replacement.
    std::array<NoisePillar, 6> pool = kAllPillars;
    const auto first = text::bounded_uniform(state, 6);
    std::swap(pool[0], pool[first]);
    const auto second = 1 + text::bounded_uniform(state, 5);

    NoiseProfile profile;
    profile.specs.push_back(
        {pool[0], 1 + static_cast<int>(text::bounded_uniform(state, 3))});
    profile.specs.push_back(
        {pool[second], 1 + static_cast<int>(text::bounded_uniform(state, 3))});
    return profile;
}

std::string render_profile_block(const NoiseProfile& profile) {
    std::string block = "[NOISE PROFILE]\nApply the following communication barriers naturally:\n";
    auto bullet = [&block](NoisePillar pillar, int level) {
        block += "- ";
        block += pillar_display_name(pillar);
        block += " (Level " + std::to_string(level) + "): ";
        block += behavior_text(pillar, level);
        block += "\n";
    };
    if (profile.empty()) {
        for (NoisePillar pillar : kAllPillars) bullet(pillar, 0);
    } else {
        for (const NoiseSpec& spec : profile.specs) bullet(spec.pillar, spec.level);
    }
    return block;
}

std::string profile_summary(const NoiseProfile& profile) {
    if (profile.empty()) return "clean";
    std::vector<std::string> parts;
    parts.reserve(profile.specs.size());
    for (const NoiseSpec& spec : profile.specs) {
        parts.push_back(std::string(pillar_id(spec.pillar)) + " L" + std::to_string(spec.level));
    }
    return text::join(parts, " + ");
}

} // namespace veripatient::noise
