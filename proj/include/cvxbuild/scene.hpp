#pragma once

#include "cvxbuild/convexity.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cvxbuild {

/// A link-level scene: a subset of the unit circle.
struct CircleScene {
    LinkSubset set;
    std::vector<std::pair<Direction, Direction>> pairs;
};

struct AngleSpec {
    BuildingPoint at;
    BuildingPoint x;
    BuildingPoint y;
};

/// Parsed scene file. Everything that influences verdicts lives here or in
/// the run overrides.
struct Scene {
    std::string name;
    std::string description;
    std::uint64_t hash = 0;

    std::shared_ptr<const AtlasBuilding> building;  // null for circle scenes
    std::optional<CircleScene> circle;

    /// Polytopes per chart; with `use_preimage` the single base-chart
    /// polytope is pulled back through the retraction.
    std::vector<std::pair<int, Polytope>> polytopes;
    bool use_preimage = true;

    std::vector<std::string> checks;
    int samples = 1000;
    double tol = 1e-9;
    std::uint64_t seed = 1;
    WallMode mode = WallMode::all_walls;
    std::vector<std::pair<BuildingPoint, BuildingPoint>> pairs;
    std::vector<BuildingPoint> points;
    std::vector<Q> epsilons;
    std::optional<AngleSpec> angle;
    int grid = 64;
    int random_geodesics = 0;

    bool is_circle() const { return circle.has_value(); }
    /// The base-chart polytope A (InputError unless there is exactly one).
    const Polytope& base_polytope() const;
    BuildingSubset subset() const;
};

/// Known check names in pipeline order.
const std::vector<std::string>& check_order();

/// Strict parser: unknown keys, floats in exact fields and malformed
/// rationals are InputErrors; JSON syntax errors name the line.
Scene parse_scene(std::string_view text, const std::string& origin = "scene");
Scene load_scene(const std::filesystem::path& path);

struct RunOverrides {
    std::optional<int> samples;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    std::optional<WallMode> mode;
    /// Replaces the scene's check list when nonempty.
    std::vector<std::string> checks;
};

struct RunReport {
    std::string scene;
    std::uint64_t scene_hash = 0;
    std::uint64_t seed = 0;
    int samples = 0;
    double tol = 0;
    std::vector<ConvexityReport> reports;

    bool verdict() const;
    Json to_json() const;
    /// [{check, verdict}] in run order.
    Json verdict_table() const;
};

/// Runs the requested checks in pipeline order.
RunReport run_scene(const Scene& scene, const RunOverrides& overrides = {});

/// Compares a run with a stored verdict table; `why` names the first
/// mismatch.
bool matches_expected(const RunReport& report, const Json& expected, std::string* why = nullptr);

/// Apartment picture of the base chart (rank 2 only).
std::string emit_svg(const Scene& scene, const RunReport& report);

/// Scene names (file stems without `.expected`) in `dir` containing
/// `filter`, sorted.
std::vector<std::string> list_scenarios(const std::filesystem::path& dir, const std::string& filter = "");

} // namespace cvxbuild
