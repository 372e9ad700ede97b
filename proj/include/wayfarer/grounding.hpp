#pragma once

// Tiered grounding: execute an action intent on the environment, falling back
// from raw coordinates to structural and semantic targeting when the page does
// not respond as expected.

#include "wayfarer/domain.hpp"
#include "wayfarer/environment.hpp"
#include "wayfarer/model_gateway.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wayfarer {

inline constexpr double kNearCutoff = 50.0;      // normalized units, center distance
inline constexpr double kTieTolerance = 25.0;    // stage-3 candidates this close in distance tie
inline constexpr int kDisambiguationAttempts = 2;

struct GroundingConfig {
    bool fallbacks = true;  // off = tier/stage 1 only
};

struct GroundingResult {
    Outcome outcome;
    std::vector<GroundingAttempt> attempts;
    PageSnapshot after;
    int model_calls = 0;  // disambiguation calls made by grounding itself
};

// The tier order each action kind walks through.
std::vector<GroundingTier> tier_order(ActionKind kind);

// Element under or nearest to `p` among clickable elements (containers, iframe
// boundaries and disabled elements excluded): smallest containing box first,
// else nearest center within kNearCutoff; ties go to the smaller box.
const ElementRecord* structural_target(const PageSnapshot& snapshot, Point p,
                                       const std::vector<ElementRole>& roles = {});

// Normalized token overlap of `field` against an element's label and name, in [0,1].
double field_similarity(std::string_view field, const ElementRecord& element);

class Grounder {
public:
    // `gateway` (action role) is used only to break ties; may be null.
    Grounder(Environment& env, ModelGateway* gateway, GroundingConfig config = {});

    GroundingResult ground(const Action& action, const PageSnapshot& before);

    GroundingResult ground_click(const Action& action, const PageSnapshot& before);
    GroundingResult ground_type(const Action& action, const PageSnapshot& before);
    GroundingResult ground_select(const Action& action, const PageSnapshot& before);

private:
    struct Step {
        GroundingAttempt attempt;
        PageSnapshot after;
    };

    Step run_ops(const Action& action, GroundingTier tier, const PageSnapshot& before, const std::vector<EnvOp>& ops,
                 std::optional<Point> target_point, std::optional<std::string> target_element);
    Step type_into(const Action& action, GroundingTier tier, const PageSnapshot& before, const std::string& key);
    Step select_option(const Action& action, GroundingTier tier, const PageSnapshot& before, const std::string& key,
                       const std::string& option);
    Step failed_attempt(const Action& action, GroundingTier tier, const PageSnapshot& before, ErrorCode code,
                        std::string message);
    // 0-based index into `labels`, or nullopt after two invalid picks.
    std::optional<std::size_t> disambiguate(const Action& action, std::string_view purpose,
                                            const std::vector<std::string>& labels, int& calls);
    GroundingResult finish(std::vector<Step> steps, int calls);

    Environment& env_;
    ModelGateway* gateway_;
    GroundingConfig config_;
};

struct SomAnnotation {
    std::string key;
    int tag = 0;
    Rect bbox;
    Rect tag_box;  // normalized placement of the drawn tag
};

struct SomOverlay {
    std::vector<SomAnnotation> annotations;
    RasterHandle rendered;  // null when the snapshot has no screenshot
};

SomOverlay build_som_overlay(const PageSnapshot& snapshot);

// Text rendering of what the annotated screenshot shows (URL, modal state,
// visible text, tagged elements), carried alongside the image.
std::string render_observation(const PageSnapshot& snapshot, const SomOverlay& overlay);

}  // namespace wayfarer
