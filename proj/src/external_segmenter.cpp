#include "omnicount/external_segmenter.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "omnicount/tensor_io.hpp"

extern char** environ;

namespace omnicount {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string mask_name(std::size_t i) {
  std::string digits = std::to_string(i);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return "mask_" + digits + ".ocpt";
}

void clear_response(const fs::path& dir) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name == "done.json" || (name.starts_with("mask_") && name.ends_with(".ocpt"))) {
      fs::remove(entry.path());
    }
  }
}

// Runs `sh -c '<command> "$1"' sh <dir>` in its own process group.
int run_command(const std::string& command, const fs::path& dir,
                std::chrono::milliseconds timeout) {
  const std::string script = command + " \"$1\"";
  const std::string dir_arg = dir.string();
  std::vector<char*> argv = {const_cast<char*>("/bin/sh"), const_cast<char*>("-c"),
                             const_cast<char*>(script.c_str()), const_cast<char*>("sh"),
                             const_cast<char*>(dir_arg.c_str()), nullptr};

  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", nullptr, &attr, argv.data(), environ);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) throw Error(ErrorKind::BackendUnavailable, "cannot spawn /bin/sh");

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  while (true) {
    const pid_t done = waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0) throw Error(ErrorKind::BackendUnavailable, "waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      throw Error(ErrorKind::Timeout, "segmenter command exceeded " +
                                          std::to_string(timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

std::string directory_name(const std::string& label) {
  std::string out = label.empty() ? "_" : label;
  for (auto& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return out;
}

}  // namespace

ExternalConfig ExternalConfig::from_env() {
  ExternalConfig config;
  if (const char* cmd = std::getenv("OMNI_SEG_CMD")) config.command = cmd;
  if (const char* t = std::getenv("OMNI_SEG_TIMEOUT_S")) {
    char* end = nullptr;
    const double seconds = std::strtod(t, &end);
    if (end == t || !(seconds > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, std::string("bad OMNI_SEG_TIMEOUT_S: ") + t);
    }
    config.timeout = std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
  }
  return config;
}

InstanceMaskSet external_segment(const Volume& rgb_patch, const std::vector<RefPoint>& points,
                                 const fs::path& exchange_dir, const ExternalConfig& config) {
  if (config.command.empty()) {
    throw Error(ErrorKind::BackendUnavailable, "no segmenter command configured (OMNI_SEG_CMD)");
  }
  std::error_code ec;
  fs::create_directories(exchange_dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + exchange_dir.string());
  clear_response(exchange_dir);

  write_tensor_file(rgb_patch, exchange_dir / "patch.ocpt");
  json pts = json::array();
  for (const auto& p : points) pts.push_back({{"y", p.y}, {"x", p.x}, {"score", p.score}});
  {
    std::ofstream out(exchange_dir / "points.json", std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write points.json");
    out << pts.dump() << '\n';
  }

  const int exit_code = run_command(config.command, exchange_dir, config.timeout);
  if (exit_code != 0) {
    throw Error(ErrorKind::BackendUnavailable,
                "segmenter command exited with status " + std::to_string(exit_code));
  }

  std::ifstream done_in(exchange_dir / "done.json");
  if (!done_in) throw Error(ErrorKind::ProtocolViolation, "done.json missing");
  std::size_t n_masks = 0;
  try {
    const auto done = json::parse(done_in);
    const auto& n = done.at("n_masks");
    if (!n.is_number_integer() || n.get<long long>() < 0) {
      throw Error(ErrorKind::ProtocolViolation, "n_masks must be a non-negative integer");
    }
    n_masks = n.get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ProtocolViolation, std::string("done.json: ") + e.what());
  }

  InstanceMaskSet set;
  for (std::size_t i = 0; i < n_masks; ++i) {
    const auto path = exchange_dir / mask_name(i);
    Mask mask;
    try {
      mask = read_mask_file(path);
    } catch (const Error& e) {
      throw Error(ErrorKind::ProtocolViolation, e.what());
    }
    if (!mask.same_dims(rgb_patch.height(), rgb_patch.width())) {
      throw Error(ErrorKind::ProtocolViolation,
                  path.filename().string() + " is " + std::to_string(mask.height()) + "x" +
                      std::to_string(mask.width()) + ", expected " +
                      std::to_string(rgb_patch.height()) + "x" + std::to_string(rgb_patch.width()));
    }
    for (auto& v : mask.data()) {
      if (v > 1) throw Error(ErrorKind::ProtocolViolation, path.filename().string() + " is not binary");
    }
    set.masks.push_back(std::move(mask));
  }
  return set;
}

InstanceMaskSet ExternalBackend::segment(const SegmentRequest& request) const {
  if (!request.rgb_patch) {
    throw Error(ErrorKind::InvalidArgument, "external backend needs an rgb patch");
  }
  auto set = external_segment(*request.rgb_patch, request.points,
                              exchange_root_ / directory_name(request.class_label), config_);
  set.class_label = request.class_label;
  return set;
}

}  // namespace omnicount
