#include <CLI11.hpp>

#include <iostream>

#include <polyquant/cli.hpp>

using namespace polyquant;

namespace {

struct Overrides {
    std::string config, out, sector, scheme, seed_from;
    int kmax = -1;
    bool with_oracle = false, via_dw = false, allow_unverified = false, no_timestamp = false;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--kmax", o.kmax, "highest sector-local level index")->check(CLI::NonNegativeNumber);
    sub->add_option("--scheme", o.scheme, "iteration scheme");
    sub->add_flag("--allow-unverified", o.allow_unverified, "run potentials outside the verified class");
    sub->add_flag("--no-timestamp", o.no_timestamp, "leave the timestamp out of the artifact headers");
}

void apply(io::RunConfig& c, const Overrides& o, const std::string& cmd) {
    if (!o.out.empty()) c.output.directory = o.out;
    if (o.allow_unverified) c.allow_unverified = true;
    if (o.no_timestamp) c.output.timestamp = false;
    if (!o.sector.empty()) c.spectrum.parity = c.stability.parity = o.sector;
    if (o.via_dw) c.spectrum.via_dw = true;
    if (cmd == "spectrum") {
        if (o.kmax >= 0) c.spectrum.k_max = o.kmax;
        if (!o.scheme.empty()) c.spectrum.scheme = o.scheme;
    } else if (cmd == "stability") {
        if (o.kmax >= 0) c.stability.k_max = o.kmax;
        if (!o.scheme.empty()) c.stability.schemes = {o.scheme};
    } else if (cmd == "wavefunction") {
        if (o.kmax >= 0) c.wavefunction.k_max = o.kmax;
        if (!o.scheme.empty()) c.wavefunction.scheme = o.scheme;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral determinants of polynomial potentials from exact quantization conditions"};
    app.set_version_flag("--version", std::string(io::version));
    app.require_subcommand(1);
    Overrides o;

    auto* spectrum = app.add_subcommand("spectrum", "solve the quantization conditions for the levels");
    add_common(spectrum, o);
    spectrum->add_option("--sector", o.sector, "parity sector")->check(CLI::IsMember({"even", "odd", "both"}));
    spectrum->add_flag("--with-oracle", o.with_oracle, "compare against the shooting oracle");
    spectrum->add_option("--seed-from", o.seed_from, "start from the levels of a chain file")->check(CLI::ExistingFile);
    spectrum->add_flag("--via-dw", o.via_dw, "also derive the even levels from the odd chains");

    auto* stability = app.add_subcommand("stability", "convergence of the schemes across a coefficient grid");
    add_common(stability, o);
    stability->add_option("--sector", o.sector, "parity sector")->check(CLI::IsMember({"even", "odd", "both"}));

    auto* wave = app.add_subcommand("wavefunction", "recessive solution from shifted-potential determinants");
    add_common(wave, o);

    auto* validate = app.add_subcommand("validate", "functional-relation checks on spectral chains");
    add_common(validate, o);
    validate->add_option("--seed-from", o.seed_from, "check the chains of a chain file instead of oracle chains")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? cli::ok : cli::usage;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        io::RunConfig c = o.config.empty() ? io::RunConfig{} : io::load_config(o.config);
        apply(c, o, cmd);
        io::check_config(c);
        const cli::Flags f{o.with_oracle, o.seed_from};
        if (cmd == "spectrum") return cli::cmd_spectrum(c, f, std::cout);
        if (cmd == "stability") return cli::cmd_stability(c, f, std::cout);
        if (cmd == "wavefunction") return cli::cmd_wavefunction(c, f, std::cout);
        return cli::cmd_validate(c, f, std::cout);
    } catch (const io::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
    } catch (const contract_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
    } catch (const admissibility_error& e) {
        std::cerr << "unsupported potential: " << e.what() << " (pass --allow-unverified to run it anyway)\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::not_converged;
    }
    return cli::usage;
}
