#include "koop/trajectory.hpp"

#include "koop/errors.hpp"
#include "koop/text.hpp"

#include <sstream>

namespace koop {

Index TrajectorySet::total_frames() const {
    Index n = 0;
    for (const auto& t : trajectories) n += t.rows();
    return n;
}

void TrajectorySet::validate() const {
    if (!(dt > 0)) throw data_error("trajectory set: dt must be positive");
    if (trajectories.empty()) throw data_error("trajectory set: no trajectories");
    const Index d = trajectories.front().cols();
    if (d < 1) throw data_error("trajectory set: dimension must be >= 1");
    for (const auto& t : trajectories) {
        if (t.cols() != d) throw data_error("trajectory set: inconsistent dimensions");
        if (t.rows() < 1) throw data_error("trajectory set: empty trajectory");
    }
}

namespace {

struct CsvBlocks {
    std::vector<std::vector<Vector>> blocks;
    double dt = 1.0;
    bool dt_seen = false;
};

void parse_csv_into(const std::filesystem::path& path, CsvBlocks& out) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    bool open_block = false;
    Index dim = out.blocks.empty() || out.blocks.front().empty()
                    ? -1
                    : static_cast<Index>(out.blocks.front().front().size());
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view sv = trim(line);
        if (sv.empty()) {
            open_block = false;
            continue;
        }
        if (sv.front() == '#') {
            // header/comment; "# dt = <v>" sets the frame time step
            const auto eq = sv.find('=');
            if (eq != std::string_view::npos) {
                const auto key = trim(sv.substr(1, eq - 1));
                if (key == "dt") {
                    out.dt = parse_double(sv.substr(eq + 1),
                                          path.string() + ":" + std::to_string(line_no));
                    out.dt_seen = true;
                }
            }
            continue;
        }
        const auto fields = split(sv, ',');
        if (dim < 0) dim = static_cast<Index>(fields.size());
        if (static_cast<Index>(fields.size()) != dim)
            throw data_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(dim) + " fields, got " + std::to_string(fields.size()));
        Vector row(dim);
        for (Index j = 0; j < dim; ++j)
            row[j] = parse_double(fields[static_cast<std::size_t>(j)],
                                  path.string() + ":" + std::to_string(line_no));
        if (!open_block) {
            out.blocks.emplace_back();
            open_block = true;
        }
        out.blocks.back().push_back(std::move(row));
    }
}

TrajectorySet blocks_to_set(CsvBlocks&& parsed, const std::string& label_prefix) {
    if (parsed.blocks.empty()) throw data_error(label_prefix + ": no data rows");
    TrajectorySet ts;
    ts.dt = parsed.dt;
    for (std::size_t b = 0; b < parsed.blocks.size(); ++b) {
        const auto& rows = parsed.blocks[b];
        Matrix m(static_cast<Index>(rows.size()), rows.front().size());
        for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Index>(r)) = rows[r].transpose();
        ts.trajectories.push_back(std::move(m));
        ts.labels.push_back(label_prefix + "[" + std::to_string(b) + "]");
    }
    ts.validate();
    return ts;
}

} // namespace

TrajectorySet load_trajectories(const std::filesystem::path& path) {
    CsvBlocks parsed;
    parse_csv_into(path, parsed);
    return blocks_to_set(std::move(parsed), path.filename().string());
}

TrajectorySet load_trajectory_manifest(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    CsvBlocks all;
    bool any = false;
    while (std::getline(in, line)) {
        const auto sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        std::filesystem::path entry{std::string(sv)};
        if (entry.is_relative()) entry = path.parent_path() / entry;
        CsvBlocks one;
        one.dt = all.dt;
        parse_csv_into(entry, one);
        if (one.dt_seen) {
            all.dt = one.dt;
            all.dt_seen = true;
        }
        for (auto& b : one.blocks) all.blocks.push_back(std::move(b));
        any = true;
    }
    if (!any) throw data_error(path.string() + ": manifest lists no files");
    return blocks_to_set(std::move(all), path.filename().string());
}

void write_trajectories(const std::filesystem::path& path, const TrajectorySet& ts) {
    ts.validate();
    std::string out;
    out += "# dt = " + format_double(ts.dt) + "\n";
    for (std::size_t k = 0; k < ts.trajectories.size(); ++k) {
        if (k > 0) out += "\n";
        const Matrix& t = ts.trajectories[k];
        for (Index r = 0; r < t.rows(); ++r) {
            for (Index c = 0; c < t.cols(); ++c) {
                if (c > 0) out += ',';
                out += format_double(t(r, c));
            }
            out += '\n';
        }
    }
    write_text_file(path, out);
}

LagPairView lag_pairs(const TrajectorySet& ts, const BasisSet& basis, int lag_steps) {
    ts.validate();
    if (lag_steps < 1) throw usage_error("lag_pairs: lag must be >= 1 frame");
    Index n_pairs = 0;
    int skipped = 0;
    for (const auto& t : ts.trajectories) {
        if (t.rows() > lag_steps)
            n_pairs += t.rows() - lag_steps;
        else
            ++skipped;
    }
    if (n_pairs == 0)
        throw data_error("no usable pairs at this lag (" + std::to_string(lag_steps) + " frames)");

    LagPairView view;
    view.lag_steps = lag_steps;
    view.pair_count = n_pairs;
    view.skipped_trajectories = skipped;
    const Index m = basis.output_dim();
    const Index d = ts.dim();
    view.x.resize(n_pairs, m);
    view.y.resize(n_pairs, m);
    view.x_raw.resize(n_pairs, d);
    view.y_raw.resize(n_pairs, d);
    Index at = 0;
    for (const auto& t : ts.trajectories) {
        const Index n = t.rows() - lag_steps;
        if (n <= 0) continue;
        const Matrix features = basis.evaluate(t);
        view.x.middleRows(at, n) = features.topRows(n);
        view.y.middleRows(at, n) = features.bottomRows(n);
        view.x_raw.middleRows(at, n) = t.topRows(n);
        view.y_raw.middleRows(at, n) = t.bottomRows(n);
        at += n;
    }
    return view;
}

LagPairView lag_pairs_raw(const TrajectorySet& ts, int lag_steps) {
    return lag_pairs(ts, BasisSet::linear(ts.dim()), lag_steps);
}

} // namespace koop
