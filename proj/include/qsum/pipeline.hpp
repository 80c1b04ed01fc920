#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "qsum/asymptotics.hpp"
#include "qsum/borelplane.hpp"
#include "qsum/config.hpp"
#include "qsum/synthesis.hpp"

namespace qsum {

enum class Stage { validate, formal, borel1, accel, borel2, sum, verify };

const std::vector<Stage>& all_stages();
std::string stage_name(Stage s);
std::optional<Stage> stage_from_name(const std::string& name);

struct StageRecord {
    std::string name;
    std::string status;  // "ok", "fail", "skipped"
    double wall_ms = 0.0;
    std::string detail;
};

struct RunManifest {
    std::string config_hash;
    std::vector<StageRecord> stages;
    std::vector<std::pair<std::string, std::string>> artifacts;  // path, checksum
    bool ok = true;

    std::string to_json() const;          // includes wall-clock (volatile) fields
    std::string canonical_json() const;   // wall-clock stripped, for comparisons
};

// Executes the requested stages in pipeline order, persisting artifacts under
// cfg.out_dir. Later stages load persisted artifacts of earlier stages when
// those are not part of the same invocation; a missing dependency raises
// StageError naming the stage whose artifact is required.
RunManifest run_pipeline(const RunConfig& cfg, const std::set<Stage>& stages);

// Per-direction reference epsilon (on the sector bisector).
cd eps_ref_for(const RunConfig& cfg, int p);

}  // namespace qsum
