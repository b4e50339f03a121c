#include "asyncfb/trace_io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "asyncfb/errors.hpp"

namespace asyncfb {

const char* to_string(EventKind kind)
{
    switch (kind) {
    case EventKind::read: return "read";
    case EventKind::agent_compute: return "agent_compute";
    case EventKind::write_receive: return "write_receive";
    case EventKind::coordinator_compute: return "coordinator_compute";
    }
    return "?";
}

EventKind parse_event_kind(const std::string& s)
{
    if (s == "read") return EventKind::read;
    if (s == "agent_compute") return EventKind::agent_compute;
    if (s == "write_receive") return EventKind::write_receive;
    if (s == "coordinator_compute") return EventKind::coordinator_compute;
    throw FormatError("unknown event kind '" + s + "'");
}

const char* to_string(UpdateMode m)
{
    switch (m) {
    case UpdateMode::aggregated: return "aggregated";
    case UpdateMode::coordinate: return "coordinate";
    case UpdateMode::barrier: return "barrier";
    }
    return "?";
}

UpdateMode parse_update_mode(const std::string& s)
{
    if (s == "aggregated") return UpdateMode::aggregated;
    if (s == "coordinate") return UpdateMode::coordinate;
    if (s == "barrier") return UpdateMode::barrier;
    throw FormatError("unknown update mode '" + s + "'");
}

long Trace::n_computes() const
{
    long n = 0;
    for (const auto& e : events) n += e.kind == EventKind::coordinator_compute;
    return n;
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace_csv(const Trace& trace, std::ostream& os)
{
    os << "event_kind,sim_time,agent_id,k,block_checksum\n";
    for (const auto& e : trace.events) {
        os << to_string(e.kind) << ',' << format_double(e.sim_time) << ',' << e.agent << ',' << e.k << ','
           << format_double(e.checksum) << '\n';
    }
}

std::vector<TraceEvent> read_trace_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw FormatError("trace.csv: empty file");
    if (line != "event_kind,sim_time,agent_id,k,block_checksum") throw FormatError("trace.csv: unexpected header");
    std::vector<TraceEvent> out;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 5) throw FormatError("trace.csv line " + std::to_string(lineno) + ": expected 5 fields");
        try {
            TraceEvent e;
            e.kind = parse_event_kind(f[0]);
            e.sim_time = std::stod(f[1]);
            e.agent = std::stoi(f[2]);
            e.k = std::stol(f[3]);
            e.checksum = std::stod(f[4]);
            out.push_back(e);
        } catch (const FormatError&) {
            throw;
        } catch (const std::exception& ex) {
            throw FormatError("trace.csv line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

namespace {

std::uint64_t to_le(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
    return v;
}

} // namespace

void write_iterates(const std::vector<Vector<double>>& rows, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    for (const auto& r : rows) {
        for (Index j = 0; j < r.size(); ++j) {
            const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(r[j]));
            os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
        }
    }
}

std::vector<Vector<double>> read_iterates(const std::filesystem::path& path, Index dim)
{
    if (dim < 1) throw FormatError("read_iterates: dimension must be positive");
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const std::size_t row_bytes = std::size_t(dim) * 8;
    if (bytes.size() % row_bytes != 0) throw FormatError(path.string() + ": size is not a whole number of rows");
    std::vector<Vector<double>> out(bytes.size() / row_bytes, Vector<double>(dim));
    for (std::size_t r = 0; r < out.size(); ++r) {
        for (Index j = 0; j < dim; ++j) {
            std::uint64_t bits;
            std::memcpy(&bits, bytes.data() + r * row_bytes + std::size_t(j) * 8, 8);
            out[r][j] = std::bit_cast<double>(to_le(bits));
        }
    }
    return out;
}

void save_trace(const Trace& trace, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "trace.csv");
        if (!os) throw FormatError("cannot write " + (dir / "trace.csv").string());
        write_trace_csv(trace, os);
    }
    write_iterates(trace.history, dir / "iterates.bin");

    nlohmann::ordered_json meta;
    meta["eta"] = trace.eta;
    meta["beta"] = trace.beta;
    meta["gamma"] = trace.gamma;
    std::vector<long> dims(trace.partition.dims().begin(), trace.partition.dims().end());
    meta["block_dims"] = dims;
    meta["mode"] = to_string(trace.mode);
    meta["dense"] = trace.dense;
    meta["live"] = trace.live;
    meta["n_iterates"] = trace.history.size();
    auto iv = nlohmann::ordered_json::array();
    for (const auto& i : trace.interventions) {
        iv.push_back({{"k", i.k}, {"agent", i.agent}, {"sim_time", i.sim_time}, {"stalled", i.stalled}});
    }
    meta["interventions"] = iv;
    std::ofstream os(dir / "trace_meta.json");
    os << meta.dump(2) << '\n';
}

Trace load_trace(const std::filesystem::path& dir)
{
    std::ifstream ms(dir / "trace_meta.json");
    if (!ms) throw FormatError("missing " + (dir / "trace_meta.json").string());
    Trace t;
    try {
        const auto meta = nlohmann::json::parse(ms);
        t.eta = meta.at("eta").get<double>();
        t.beta = meta.at("beta").get<double>();
        t.gamma = meta.at("gamma").get<double>();
        std::vector<Index> dims;
        for (const auto& d : meta.at("block_dims")) dims.push_back(d.get<Index>());
        t.partition = BlockPartition(dims);
        t.mode = parse_update_mode(meta.at("mode").get<std::string>());
        t.dense = meta.at("dense").get<bool>();
        t.live = meta.at("live").get<bool>();
        for (const auto& i : meta.at("interventions")) {
            t.interventions.push_back(
                {i.at("k").get<long>(), i.at("agent").get<int>(), i.at("sim_time").get<double>(), i.at("stalled").get<bool>()});
        }
        const auto n_iter = meta.at("n_iterates").get<std::size_t>();
        std::ifstream cs(dir / "trace.csv");
        if (!cs) throw FormatError("missing " + (dir / "trace.csv").string());
        t.events = read_trace_csv(cs);
        t.history = read_iterates(dir / "iterates.bin", t.partition.total());
        if (t.history.size() != n_iter) throw FormatError("iterates.bin row count disagrees with trace_meta.json");
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("trace_meta.json: ") + ex.what());
    } catch (const ContractViolation& ex) {
        throw FormatError(std::string("trace_meta.json: ") + ex.what());
    }
    if (t.dense && long(t.history.size()) != t.n_computes() + 1) {
        throw FormatError("trace: dense history must hold one iterate per compute plus x_0");
    }
    return t;
}

} // namespace asyncfb
