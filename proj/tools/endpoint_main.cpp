// Standalone reference endpoint speaking the harness's external-endpoint
// contract: ROLE, WWW_DIR / DOWNLOADS_DIR / LOGS_DIR, REQUESTS, BIND_ADDR /
// SERVER_ADDR environment variables; exit code 0 on success.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "satqic/endpoint.hpp"
#include "satqic/udp_driver.hpp"

using namespace satqic;
namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

std::string require_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) {
    std::cerr << "missing required environment variable " << name << "\n";
    std::exit(2);
  }
  return v;
}

CcAlgorithm cca_from_env() {
  const std::string name = env_or("SATQIC_CCA", "cubic");
  if (name == "newreno") return CcAlgorithm::NewReno;
  if (name == "cubic") return CcAlgorithm::Cubic;
  if (name == "ratestartup") return CcAlgorithm::RateStartup;
  std::cerr << "unknown SATQIC_CCA: " << name << "\n";
  std::exit(2);
}

int run_server() {
  const std::string www = require_env("WWW_DIR");
  const std::string bind_addr = require_env("BIND_ADDR");
  ServerEndpoint server(cca_from_env());
  server.load_dir(www);
  // Serve until killed by the orchestrator.
  const double forever = 3600.0 * 24;
  std::atomic<bool> stop{false};
  run_endpoint_over_udp(server, bind_addr, "", forever, &stop);
  return 0;
}

int run_client() {
  const std::string downloads = require_env("DOWNLOADS_DIR");
  const std::string server_addr = require_env("SERVER_ADDR");
  const std::string requests = require_env("REQUESTS");
  const double timeout_s = std::stod(env_or("SATQIC_TIMEOUT_S", "120"));

  std::mt19937_64 rng(std::random_device{}());
  std::istringstream names(requests);
  std::string name;
  while (names >> name) {
    const uint32_t conn_id = static_cast<uint32_t>(rng()) | 1u;
    ClientEndpoint client(name, conn_id);
    const bool done = run_endpoint_over_udp(client, "", server_addr, timeout_s);
    if (!done || client.failed()) {
      std::cerr << "transfer failed: " << name << "\n";
      return 1;
    }
    std::ofstream out(fs::path(downloads) / name, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write download: " << name << "\n";
      return 1;
    }
    const auto& data = client.received_data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
  }
  return 0;
}

}  // namespace

int main() {
  const std::string role = require_env("ROLE");
  if (role == "server") return run_server();
  if (role == "client") return run_client();
  std::cerr << "ROLE must be client or server\n";
  return 2;
}
