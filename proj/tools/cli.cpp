#include "cli.hpp"

#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "abl/mta/admin.hpp"
#include "abl/mta/config.hpp"
#include "abl/mta/server.hpp"
#include "abl/net.hpp"
#include "abl/sim/scenario.hpp"
#include "abl/sim/simulator.hpp"

namespace abl::cli {
namespace {

int print_response(mta::AdminResponse const& r, std::ostream& out, std::ostream& err)
{
  out << r.render();
  if (!r.ok()) {
    err << "abl: server answered ERR " << *r.error << '\n';
    return kFailure;
  }
  return kOk;
}

int admin_command(std::string const& endpoint_text, std::string const& command, std::ostream& out,
                  std::ostream& err)
{
  net::Endpoint endpoint;
  try {
    endpoint = net::Endpoint::parse(endpoint_text);
  } catch (std::exception const& e) {
    err << "abl: " << e.what() << '\n';
    return kFailure;
  }
  try {
    return print_response(mta::admin_request(endpoint, command), out, err);
  } catch (net::NetError const& e) {
    err << "abl: cannot reach admin port " << endpoint.to_string() << ": " << e.what() << '\n';
    return kUnreachable;
  }
}

}  // namespace

int run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"SMTP receiver with an active blacklist"};
  app.name(args.empty() ? "abl" : args.front());
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("-c,--config", config_path, "Configuration file (key = value)");
  std::string admin_override;

  // serve: every configuration key doubles as a flag.
  auto* serve = app.add_subcommand("serve", "Run the SMTP server");
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<std::string, CLI::Option*>> flag_options;
  for (auto const key : mta::config_keys()) {
    auto const name = std::string(key);
    flag_options.emplace_back(name, serve->add_option("--" + name, flag_values[name]));
  }

  auto* bl = app.add_subcommand("bl", "Inspect or edit the blacklist of a running server");
  bl->require_subcommand(1);
  bl->add_option("--admin", admin_override, "Admin endpoint host:port");
  auto* bl_list = bl->add_subcommand("list", "List entries");
  auto* bl_add = bl->add_subcommand("add", "Add or refresh an entry");
  auto* bl_del = bl->add_subcommand("del", "Delete an entry");
  std::string ip;
  std::string sender;
  std::vector<std::string> reason;
  bl_add->add_option("ip", ip)->required();
  bl_add->add_option("sender", sender, "Envelope sender or - for IP only")->required();
  bl_add->add_option("reason", reason);
  bl_del->add_option("ip", ip)->required();
  bl_del->add_option("sender", sender)->required();

  auto* stats = app.add_subcommand("stats", "Print server counters");
  stats->add_option("--admin", admin_override, "Admin endpoint host:port");

  auto* simulate = app.add_subcommand("simulate", "Run a traffic simulation");
  std::string scenario_path;
  std::string report_path;
  simulate->add_option("scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("--out", report_path, "Write the CSV report here instead of stdout");

  std::vector<char const*> argv;
  for (auto const& a : args)
    argv.push_back(a.c_str());
  if (argv.empty())
    argv.push_back("abl");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (CLI::ParseError const& e) {
    return app.exit(e, out, err) == 0 ? kOk : kFailure;
  }

  mta::Settings file_settings;
  mta::Settings flag_settings;
  for (auto const& [name, opt] : flag_options)
    if (opt->count() > 0)
      flag_settings.emplace_back(name, flag_values[name]);

  mta::ServerConfig config;
  try {
    if (!config_path.empty())
      file_settings = mta::read_settings_file(config_path);
    config = mta::resolve_config(file_settings, flag_settings);
  } catch (mta::ConfigError const& e) {
    err << "abl: " << e.what() << '\n';
    return kFailure;
  }
  auto const admin_endpoint = admin_override.empty() ? config.admin_listen_address : admin_override;

  if (serve->parsed())
    return mta::serve(config) == 0 ? kOk : kFailure;

  if (stats->parsed())
    return admin_command(admin_endpoint, "STATS", out, err);

  if (bl->parsed()) {
    if (bl_list->parsed())
      return admin_command(admin_endpoint, "BL LIST", out, err);
    if (bl_del->parsed())
      return admin_command(admin_endpoint, "BL DEL " + ip + " " + sender, out, err);
    std::string cmd = "BL ADD " + ip + " " + sender;
    for (auto const& word : reason)
      cmd += " " + word;
    return admin_command(admin_endpoint, cmd, out, err);
  }

  if (simulate->parsed()) {
    try {
      auto const scenario = sim::read_scenario_file(scenario_path);
      auto const report = sim::run_scenario(scenario);
      if (report_path.empty())
        out << sim::format_report(report);
      else
        sim::write_report(report, report_path);
      return kOk;
    } catch (std::exception const& e) {
      err << "abl: simulation failed: " << e.what() << '\n';
      return kFailure;
    }
  }
  return kFailure;
}

}  // namespace abl::cli
