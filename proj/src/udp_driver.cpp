#include "satqic/udp_driver.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <queue>
#include <stdexcept>

namespace satqic {

namespace {

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

sockaddr_in make_sockaddr(const std::string& host, uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
    throw std::runtime_error("bad address: " + host);
  return sa;
}

}  // namespace

std::pair<std::string, uint16_t> split_host_port(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos)
    throw std::runtime_error("address must be host:port, got '" + addr + "'");
  return {addr.substr(0, colon),
          static_cast<uint16_t>(std::stoi(addr.substr(colon + 1)))};
}

int bind_udp_socket(const std::string& host, uint16_t port, uint16_t* bound_port) {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  sockaddr_in sa = make_sockaddr(host, port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) {
    ::close(fd);
    throw std::runtime_error("bind failed on " + host + ":" + std::to_string(port));
  }
  if (bound_port) {
    socklen_t len = sizeof(sa);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
    *bound_port = ntohs(sa.sin_port);
  }
  return fd;
}

UdpLinkDriver::UdpLinkDriver(const ScenarioSpec& spec, uint64_t seed, RunIdentity id)
    : channel_(spec, seed), trace_(std::move(id)) {
  client_fd_ = bind_udp_socket("127.0.0.1", 0, &client_port_);
  server_fd_ = bind_udp_socket("127.0.0.1", 0, &server_port_);
}

UdpLinkDriver::~UdpLinkDriver() {
  if (client_fd_ >= 0) ::close(client_fd_);
  if (server_fd_ >= 0) ::close(server_fd_);
}

std::string UdpLinkDriver::client_side_addr() const {
  return "127.0.0.1:" + std::to_string(client_port_);
}

std::string UdpLinkDriver::server_side_addr() const {
  return "127.0.0.1:" + std::to_string(server_port_);
}

void UdpLinkDriver::set_server_addr(const std::string& host_port) {
  server_addr_ = host_port;
}

void UdpLinkDriver::record_clamped(PacketRecord rec) {
  // Wall-clock jitter can deliver slightly late; keep per-tap monotonicity.
  int64_t& last = last_tap_ns_[static_cast<int>(rec.tap)];
  if (rec.timestamp_ns < last) rec.timestamp_ns = last;
  last = rec.timestamp_ns;
  trace_.record(std::move(rec));
}

void UdpLinkDriver::run(double timeout_s, const std::atomic<bool>& stop) {
  if (server_addr_.empty()) throw std::runtime_error("server address not set");
  const auto [srv_host, srv_port] = split_host_port(server_addr_);
  const sockaddr_in server_sa = make_sockaddr(srv_host, srv_port);
  sockaddr_in client_sa{};
  bool client_known = false;

  struct Scheduled {
    double time;
    uint64_t seq;
    bool to_server;
    Datagram bytes;
  };
  auto later = [](const Scheduled& a, const Scheduled& b) {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  };
  std::priority_queue<Scheduled, std::vector<Scheduled>, decltype(later)> pending(later);
  uint64_t seq = 0;

  const auto start = std::chrono::steady_clock::now();
  uint8_t buf[65536];

  while (!stop.load(std::memory_order_relaxed)) {
    const double now = elapsed_s(start);
    if (now >= timeout_s) break;

    // Flush deliveries that are due.
    while (!pending.empty() && pending.top().time <= elapsed_s(start)) {
      const Scheduled& s = pending.top();
      PacketRecord rec;
      rec.timestamp_ns = to_ns(s.time);
      rec.tap = s.to_server ? Tap::ServerSide : Tap::ClientSide;
      rec.direction = s.to_server ? Direction::Reverse : Direction::Forward;
      rec.size = static_cast<int>(s.bytes.size());
      rec.fate = RecordFate::Delivered;
      rec.annotation = annotate(s.bytes.data(), s.bytes.size());
      record_clamped(std::move(rec));
      if (s.to_server) {
        ::sendto(server_fd_, s.bytes.data(), s.bytes.size(), 0,
                 reinterpret_cast<const sockaddr*>(&server_sa), sizeof(server_sa));
      } else if (client_known) {
        ::sendto(client_fd_, s.bytes.data(), s.bytes.size(), 0,
                 reinterpret_cast<const sockaddr*>(&client_sa), sizeof(client_sa));
      }
      pending.pop();
    }

    double wait_s = 0.01;
    if (!pending.empty())
      wait_s = std::min(wait_s, std::max(0.0, pending.top().time - elapsed_s(start)));
    pollfd fds[2] = {{client_fd_, POLLIN, 0}, {server_fd_, POLLIN, 0}};
    const int rc = ::poll(fds, 2, static_cast<int>(wait_s * 1000.0) + 1);
    if (rc <= 0) continue;

    for (int i = 0; i < 2; ++i) {
      if (!(fds[i].revents & POLLIN)) continue;
      sockaddr_in from{};
      socklen_t from_len = sizeof(from);
      const ssize_t n = ::recvfrom(fds[i].fd, buf, sizeof(buf), 0,
                                   reinterpret_cast<sockaddr*>(&from), &from_len);
      if (n <= 0) continue;
      const bool from_client = fds[i].fd == client_fd_;
      if (from_client) {
        client_sa = from;
        client_known = true;
      }
      const double recv_now = elapsed_s(start);
      if (n > kMtuBytes) continue;  // oversize datagrams are not forwarded
      const Direction dir = from_client ? Direction::Reverse : Direction::Forward;
      const PacketFate fate = channel_.offer(dir, static_cast<int>(n), recv_now);
      PacketRecord rec;
      rec.timestamp_ns = to_ns(recv_now);
      rec.tap = from_client ? Tap::ClientSide : Tap::ServerSide;
      rec.direction = dir;
      rec.size = static_cast<int>(n);
      rec.fate = record_fate(fate);
      rec.annotation = annotate(buf, static_cast<size_t>(n));
      record_clamped(std::move(rec));
      if (const auto* d = std::get_if<Delivered>(&fate))
        pending.push({d->delivery_time, seq++, from_client, Datagram(buf, buf + n)});
    }
  }
}

bool run_endpoint_over_udp(Endpoint& endpoint, const std::string& bind_addr,
                           const std::string& peer_addr, double timeout_s,
                           const std::atomic<bool>* stop) {
  uint16_t port = 0;
  int fd;
  if (!bind_addr.empty()) {
    const auto [host, want_port] = split_host_port(bind_addr);
    fd = bind_udp_socket(host, want_port, &port);
  } else {
    fd = bind_udp_socket("127.0.0.1", 0, &port);
  }

  sockaddr_in peer{};
  bool peer_known = false;
  if (!peer_addr.empty()) {
    const auto [host, pport] = split_host_port(peer_addr);
    peer = make_sockaddr(host, pport);
    peer_known = true;
  }

  const auto start = std::chrono::steady_clock::now();
  uint8_t buf[65536];

  auto send_all = [&](const std::vector<Datagram>& dgs) {
    if (!peer_known) return;
    for (const auto& dg : dgs)
      ::sendto(fd, dg.data(), dg.size(), 0, reinterpret_cast<const sockaddr*>(&peer),
               sizeof(peer));
  };

  while (!endpoint.finished()) {
    const double now = elapsed_s(start);
    if (now >= timeout_s) break;
    if (stop && stop->load(std::memory_order_relaxed)) break;

    const auto wakeup = endpoint.next_wakeup();
    if (wakeup && *wakeup <= now) {
      send_all(endpoint.on_wakeup(now));
      continue;
    }
    double wait_s = timeout_s - now;
    if (wakeup) wait_s = std::min(wait_s, *wakeup - now);
    wait_s = std::min(wait_s, 0.05);

    pollfd pfd{fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, std::max(0, static_cast<int>(wait_s * 1000.0)));
    if (rc > 0 && (pfd.revents & POLLIN)) {
      sockaddr_in from{};
      socklen_t from_len = sizeof(from);
      const ssize_t n = ::recvfrom(fd, buf, sizeof(buf), 0,
                                   reinterpret_cast<sockaddr*>(&from), &from_len);
      if (n > 0) {
        if (!peer_known) {
          peer = from;
          peer_known = true;
        }
        send_all(endpoint.on_datagram(buf, static_cast<size_t>(n), elapsed_s(start)));
      }
    }
  }

  ::close(fd);
  return endpoint.finished();
}

}  // namespace satqic
