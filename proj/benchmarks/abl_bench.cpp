#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "abl/blacklist/store.hpp"
#include "abl/classifier.hpp"
#include "abl/sim/payload.hpp"
#include "abl/smtp/command.hpp"
#include "abl/smtp/reply.hpp"
#include "abl/smtp/session.hpp"

namespace {

using namespace abl;

void BM_ParseCommand(benchmark::State& state)
{
  std::vector<std::string> const lines{"EHLO client.example", "MAIL FROM:<someone@sender.example> SIZE=10240",
                                       "RCPT TO:<postmaster@abl.example>", "DATA", "RSET", "QUIT"};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(smtp::parse_command(lines[i]));
    i = (i + 1) % lines.size();
  }
}
BENCHMARK(BM_ParseCommand);

void BM_RenderReply(benchmark::State& state)
{
  auto const reply = smtp::replies::greeting("mx.abl.example");
  for (auto _ : state)
    benchmark::DoNotOptimize(smtp::render_reply(reply));
}
BENCHMARK(BM_RenderReply);

// Un-stuffs a body delivered in chunks of state.range(1) octets.
void BM_ReceiveData(benchmark::State& state)
{
  auto const body = sim::make_payload(static_cast<std::size_t>(state.range(0)), 7, "", {});
  auto const wire = sim::dot_stuff(body);
  auto const chunk = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    smtp::SessionState s;
    s.phase = smtp::Phase::ReceivingData;
    for (std::size_t at = 0; at < wire.size(); at += chunk)
      benchmark::DoNotOptimize(smtp::receive_data(s, std::string_view(wire).substr(at, chunk)));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * wire.size()));
}
BENCHMARK(BM_ReceiveData)->Args({10240, 1460})->Args({1 << 20, 16384})->Args({1 << 20, 65536});

blacklist::SenderIdentity nth_identity(std::size_t i, bool with_sender)
{
  auto const ip = "10." + std::to_string((i >> 16) & 255) + "." + std::to_string((i >> 8) & 255) + "." +
                  std::to_string(i & 255);
  auto const sender = "u" + std::to_string(i) + "@x.example";
  return *blacklist::SenderIdentity::make(ip, with_sender ? std::optional<std::string_view>(sender) : std::nullopt);
}

void BM_StoreCheck(benchmark::State& state)
{
  auto const n = static_cast<std::size_t>(state.range(0));
  blacklist::AblStore store;
  for (std::size_t i = 0; i < n; ++i)
    store.record_spam(nth_identity(i, i % 2 == 0), "bench", 1000);
  std::vector<blacklist::SenderIdentity> probes;
  for (std::size_t i = 0; i < 1024; ++i)
    probes.push_back(nth_identity(i * 7919 % (2 * n), true));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.check(probes[i], 2000));
    i = (i + 1) % probes.size();
  }
}
BENCHMARK(BM_StoreCheck)->Arg(1000)->Arg(100000);

void BM_StoreBlockedAttempt(benchmark::State& state)
{
  auto const n = static_cast<std::size_t>(state.range(0));
  blacklist::AblStore store({3600, {2, 1}, 86400});
  for (std::size_t i = 0; i < n; ++i)
    store.record_spam(nth_identity(i, false), "bench", 1000);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.record_blocked_attempt(nth_identity(i, false), 2000));
    i = (i + 1) % n;
  }
}
BENCHMARK(BM_StoreBlockedAttempt)->Arg(1000)->Arg(100000);

void BM_KeywordScore(benchmark::State& state)
{
  classify::KeywordScorer scorer(classify::parse_keywords("lottery:5,win:2,free:1.5,winner:3"), 5.0);
  auto const body = sim::make_payload(static_cast<std::size_t>(state.range(0)), 3, "lottery", {});
  smtp::Envelope envelope;
  for (auto _ : state)
    benchmark::DoNotOptimize(scorer.classify(envelope, body));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * body.size()));
}
BENCHMARK(BM_KeywordScore)->Arg(10240)->Arg(1 << 20);

}  // namespace

// The packaged benchmark_main archive is LTO bytecode from another compiler.
BENCHMARK_MAIN();
