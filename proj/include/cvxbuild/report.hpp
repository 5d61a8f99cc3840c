#pragma once

#include "json.hpp"

#include <string>
#include <vector>

namespace cvxbuild {

using Json = nlohmann::ordered_json;

/// One piece of evidence attached to a verdict. Failure witnesses carry
/// enough data to be re-evaluated independently.
struct Witness {
    std::string kind;
    Json data = Json::object();
};

struct ConvexityReport {
    std::string check;
    bool verdict = true;
    double tolerance = 1e-9;
    std::vector<Witness> witnesses;

    void fail(std::string kind, Json data)
    {
        verdict = false;
        witnesses.push_back({std::move(kind), std::move(data)});
    }
    void note(std::string kind, Json data) { witnesses.push_back({std::move(kind), std::move(data)}); }

    const Witness* first(const std::string& kind) const
    {
        for (const auto& w : witnesses)
            if (w.kind == kind) return &w;
        return nullptr;
    }

    Json to_json() const
    {
        Json j;
        j["check"] = check;
        j["verdict"] = verdict;
        j["tolerance"] = tolerance;
        Json ws = Json::array();
        for (const auto& w : witnesses) ws.push_back(Json{{"kind", w.kind}, {"data", w.data}});
        j["witnesses"] = ws;
        return j;
    }
};

} // namespace cvxbuild
