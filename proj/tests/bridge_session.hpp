#pragma once

#include <string>
#include <vector>

#include "rubble/scene.hpp"

// Scripted two-client conversation with a live bridge server, used as the conformance check.
namespace session {

struct Transcript {
  std::vector<std::string> primary;   // every line the well-behaved client received
  std::vector<std::string> intruder;  // every line the client sending malformed input received
};

// Lines the primary client sends. The intruder joins after the first step.
std::vector<std::string> primary_script();
std::vector<std::string> intruder_script();

// Pose the script sets through /robot/set_pose.
rubble::Transform scripted_pose();

// Runs the session against a server on an ephemeral port. Throws std::runtime_error on socket
// failures or timeouts.
Transcript run(const rubble::Scene& scene);

// Empty when every depth raster the primary client received byte-equals a direct render of the
// same world state and camera; otherwise a description of the first mismatch.
std::string verify_depth(const rubble::Scene& scene, const Transcript& t);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

}  // namespace session
