#pragma once

// Shared fixtures for the test binaries: a synthetic corpus with planted
// lane changes and known-bad vehicles, a scripted pursuit catalog for
// training smoke runs, and small filesystem helpers.

#include <cstdint>
#include <string>
#include <vector>

#include "scgen/config.hpp"
#include "scgen/lane_map.hpp"
#include "scgen/scenario.hpp"
#include "scgen/sim_env.hpp"
#include "scgen/trajectory.hpp"

namespace scgen::testing {

// Self-deleting temporary directory under the system temp root.
class TempDir {
  public:
    explicit TempDir(const std::string& tag = "scgen_test");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

  private:
    std::string path_;
};

std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

struct PlantedCounts {
    size_t accepted = 30;       // clean events that must survive mining
    size_t short_neighbor = 8;  // only neighbor covers a fraction of the window
    size_t no_neighbor = 6;     // nobody else on the road at the change
    size_t overspeed = 3;       // ego runs far above the speed bound
    size_t teleport = 3;        // single-frame position jump inside the window

    size_t total() const {
        return accepted + short_neighbor + no_neighbor + overspeed + teleport;
    }
};

struct PlantedCorpus {
    std::vector<Trajectory> trajectories;
    LaneMap map;                               // three parallel lanes
    std::vector<std::string> planted_ids;      // every ego with a planted change
    std::vector<std::string> expected_pass_ids; // the subset that must be accepted
    PlantedCounts counts;
};

// One lane change per planted ego, one dedicated neighbor per event (except
// the no-neighbor class), events separated in time so they cannot interact.
// Neighbor lateral paths carry a small per-event wiggle so downstream risk
// calibration sees non-degenerate jerk/smoothness distributions.
PlantedCorpus make_planted_corpus(const PlantedCounts& counts = {});

// Straight-road pursuit scenarios: the ego merges into the follower's lane a
// short gap ahead; the follower (default adversary role) starts behind at
// matched speed. Horizon 4 s at dt 0.1.
std::vector<Scenario> make_pursuit_catalog(size_t n = 8);

// Config sized for minute-scale training on the pursuit catalog.
RunConfig make_smoke_config();

// Feature matrix with explicit rows; each row is the 9 feature values, and
// every listed row is unmasked. Padding rows up to `rows` are masked zeros.
FeatureMatrix make_features(size_t rows, const std::vector<std::vector<double>>& filled);

// Empirical squared 2-Wasserstein distance between diagonal Gaussians via
// per-dimension sorted-sample matching (exact one-dimensional optimal
// transport per dimension, summed).
double mc_wasserstein_sq(const std::vector<double>& mu1, const std::vector<double>& sd1,
                         const std::vector<double>& mu2, const std::vector<double>& sd2,
                         size_t samples, uint64_t seed);

} // namespace scgen::testing
