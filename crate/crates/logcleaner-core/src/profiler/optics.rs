//! Density-based ordering (OPTICS) with xi-steepness cluster extraction.
//!
//! The duplicative-event separator embeds events as normalized co-occurrence
//! rows and needs a clustering that (a) treats exact duplicates as
//! distance-zero points and (b) leaves isolated events unclustered instead of
//! forcing them into a partition. OPTICS gives both: it produces a reachability
//! ordering, and the xi method cuts clusters where the plot is steep, leaving
//! everything else as noise.
//!
//! The extraction follows the ratio-based steepness definition: position `i`
//! is steep upward when `r[i] / r[i+1] <= 1 - xi` and steep downward when the
//! ratio is `>= 1 / (1 - xi)`. A sentinel `inf` is appended to the plot so a
//! trailing climb still terminates a cluster. Candidate clusters combine a
//! steep-down area with a later steep-up area, then shrink via the
//! predecessor-correction rule so a cluster never ends on a point whose
//! density link leads outside it.

/// Full output of the ordering pass, indexed by original point id except for
/// `ordering` itself.
#[derive(Debug, Clone)]
pub struct OpticsOutput {
    /// Visit order; `ordering[k]` is the original index of the k-th point.
    pub ordering: Vec<usize>,
    /// Final reachability distance per original index; the first visited
    /// point keeps `inf`.
    pub reachability: Vec<f64>,
    /// Distance to the `min_samples`-th nearest neighbor (self included),
    /// `inf` when fewer than `min_samples` points exist.
    pub core_distance: Vec<f64>,
    /// The point that last improved each point's reachability.
    pub predecessor: Vec<Option<usize>>,
}

impl OpticsOutput {
    /// Reachability values in visit order (the "reachability plot").
    pub fn reachability_plot(&self) -> Vec<f64> {
        self.ordering.iter().map(|&i| self.reachability[i]).collect()
    }
}

/// Computes the OPTICS ordering over a symmetric distance matrix.
///
/// Every pair is considered a neighbor (no radius cap). Ties in the
/// next-point selection go to the lowest original index, which makes the
/// ordering deterministic.
pub fn compute_optics(dist: &[Vec<f64>], min_samples: usize) -> OpticsOutput {
    let n = dist.len();
    debug_assert!(min_samples >= 1);
    debug_assert!(dist.iter().all(|row| row.len() == n));

    let mut core = vec![f64::INFINITY; n];
    if n >= min_samples {
        let mut sorted = vec![0.0; n];
        for i in 0..n {
            sorted.copy_from_slice(&dist[i]);
            sorted.sort_by(f64::total_cmp);
            core[i] = sorted[min_samples - 1];
        }
    }

    let mut reach = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut processed = vec![false; n];
    let mut ordering = Vec::with_capacity(n);

    for _ in 0..n {
        let mut point = None;
        for j in 0..n {
            if processed[j] {
                continue;
            }
            match point {
                None => point = Some(j),
                Some(p) => {
                    if reach[j] < reach[p] {
                        point = Some(j);
                    }
                }
            }
        }
        let point = point.expect("loop runs exactly n times");
        processed[point] = true;
        ordering.push(point);

        if core[point].is_finite() {
            for j in 0..n {
                if processed[j] {
                    continue;
                }
                let rdist = dist[point][j].max(core[point]);
                if rdist < reach[j] {
                    reach[j] = rdist;
                    pred[j] = Some(point);
                }
            }
        }
    }

    OpticsOutput {
        ordering,
        reachability: reach,
        core_distance: core,
        predecessor: pred,
    }
}

/// Inclusive range of plot positions forming one cluster candidate.
pub type PlotRange = (usize, usize);

/// Extracts xi-method clusters from an ordering.
///
/// Returns per-point labels in **original index order** (`None` = noise) plus
/// the raw candidate ranges in plot coordinates. Overlapping candidates are
/// resolved smallest-first: a range is labeled only if none of its positions
/// is labeled yet, so nested superclusters defer to their children.
pub fn extract_xi_clusters(
    out: &OpticsOutput,
    min_samples: usize,
    min_cluster_size: usize,
    xi: f64,
) -> (Vec<Option<usize>>, Vec<PlotRange>) {
    let reach_plot = out.reachability_plot();
    let pred_plot: Vec<Option<usize>> = out.ordering.iter().map(|&i| out.predecessor[i]).collect();
    let clusters = xi_cluster(
        &reach_plot,
        &pred_plot,
        &out.ordering,
        xi,
        min_samples,
        min_cluster_size,
    );
    let labels = labels_from_ranges(&out.ordering, &clusters);
    (labels, clusters)
}

struct SteepDownArea {
    start: usize,
    end: usize,
    /// Maximum reachability seen between this area and the current position.
    mib: f64,
}

fn xi_cluster(
    reach_plot: &[f64],
    pred_plot: &[Option<usize>],
    ordering: &[usize],
    xi: f64,
    min_samples: usize,
    min_cluster_size: usize,
) -> Vec<PlotRange> {
    let n = reach_plot.len();
    if n == 0 {
        return Vec::new();
    }
    // Sentinel so a steep-up region running to the end still closes.
    let mut plot = reach_plot.to_vec();
    plot.push(f64::INFINITY);

    let xi_complement = 1.0 - xi;
    // ratio[i] compares consecutive plot values; inf/inf gives NaN, and every
    // comparison below is false for NaN, which is exactly the intent: a flat
    // infinite stretch is neither steep nor sloped.
    let ratio: Vec<f64> = (0..n).map(|i| plot[i] / plot[i + 1]).collect();
    let steep_up: Vec<bool> = ratio.iter().map(|&r| r <= xi_complement).collect();
    let steep_down: Vec<bool> = ratio.iter().map(|&r| r >= 1.0 / xi_complement).collect();
    let upward: Vec<bool> = ratio.iter().map(|&r| r < 1.0).collect();
    let downward: Vec<bool> = ratio.iter().map(|&r| r > 1.0).collect();

    let mut sdas: Vec<SteepDownArea> = Vec::new();
    let mut clusters: Vec<PlotRange> = Vec::new();
    let mut index = 0usize;
    let mut mib = 0.0f64;

    for steep_index in 0..n {
        if !(steep_up[steep_index] || steep_down[steep_index]) {
            continue;
        }
        // Skip positions already consumed by an extended region.
        if steep_index < index {
            continue;
        }

        mib = plot[index..=steep_index].iter().fold(mib, |a, &b| a.max(b));

        if steep_down[steep_index] {
            filter_sdas(&mut sdas, mib, xi_complement, &plot);
            let d_start = steep_index;
            let d_end = extend_region(&steep_down, &upward, d_start, min_samples);
            sdas.push(SteepDownArea {
                start: d_start,
                end: d_end,
                mib: 0.0,
            });
            index = d_end + 1;
            mib = plot[index];
        } else {
            filter_sdas(&mut sdas, mib, xi_complement, &plot);
            let u_start = steep_index;
            let u_end = extend_region(&steep_up, &downward, u_start, min_samples);
            index = u_end + 1;
            mib = plot[index];

            let mut u_clusters: Vec<PlotRange> = Vec::new();
            for d in &sdas {
                let mut c_start = d.start;
                let mut c_end = u_end;

                // The climb must clear everything seen since the down area,
                // otherwise the pairing spans a deeper intermediate valley.
                if plot[c_end + 1] * xi_complement < d.mib {
                    continue;
                }

                // Trim the higher wall down to the level of the lower one.
                let d_max = plot[d.start];
                if d_max * xi_complement >= plot[c_end + 1] {
                    while plot[c_start + 1] > plot[c_end + 1] && c_start < d.end {
                        c_start += 1;
                    }
                } else if plot[c_end + 1] * xi_complement >= d_max {
                    while c_end > u_start && plot[c_end - 1] > d_max {
                        c_end -= 1;
                    }
                }

                let Some((s, e)) =
                    correct_predecessor(&plot, pred_plot, ordering, c_start, c_end)
                else {
                    continue;
                };
                c_start = s;
                c_end = e;

                if c_end - c_start + 1 < min_cluster_size {
                    continue;
                }
                // The cluster must begin inside the down area and end inside
                // the up area.
                if c_start > d.end {
                    continue;
                }
                if c_end < u_start {
                    continue;
                }
                u_clusters.push((c_start, c_end));
            }
            // Candidates were generated oldest-down-area first, i.e. largest
            // first; reverse so smaller (inner) clusters take precedence.
            u_clusters.reverse();
            clusters.extend(u_clusters);
        }
    }
    clusters
}

/// Drops steep-down areas invalidated by the running maximum and folds that
/// maximum into the survivors.
fn filter_sdas(sdas: &mut Vec<SteepDownArea>, mib: f64, xi_complement: f64, plot: &[f64]) {
    if mib.is_infinite() {
        sdas.clear();
        return;
    }
    sdas.retain(|s| mib <= plot[s.start] * xi_complement);
    for s in sdas.iter_mut() {
        s.mib = s.mib.max(mib);
    }
}

/// Grows a steep region from `start`, tolerating at most `min_samples`
/// consecutive non-steep points as long as they do not slope the wrong way.
fn extend_region(steep: &[bool], opposite: &[bool], start: usize, min_samples: usize) -> usize {
    let n = steep.len();
    let mut non_steep_run = 0usize;
    let mut index = start;
    let mut end = start;
    while index < n {
        if steep[index] {
            non_steep_run = 0;
            end = index;
        } else if !opposite[index] {
            non_steep_run += 1;
            if non_steep_run > min_samples {
                break;
            }
        } else {
            return end;
        }
        index += 1;
    }
    end
}

/// Shrinks `[s, e]` from the right until the last point either sits below the
/// first or has its predecessor inside the cluster. Returns `None` when the
/// range collapses.
fn correct_predecessor(
    plot: &[f64],
    pred_plot: &[Option<usize>],
    ordering: &[usize],
    s: usize,
    mut e: usize,
) -> Option<(usize, usize)> {
    while s < e {
        if plot[s] > plot[e] {
            return Some((s, e));
        }
        if let Some(p_e) = pred_plot[e] {
            if ordering[s..e].contains(&p_e) {
                return Some((s, e));
            }
        }
        e -= 1;
    }
    None
}

/// Assigns labels smallest-cluster-first; the result is indexed by original
/// point id.
fn labels_from_ranges(ordering: &[usize], clusters: &[PlotRange]) -> Vec<Option<usize>> {
    let n = ordering.len();
    let mut plot_labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0usize;
    for &(s, e) in clusters {
        if plot_labels[s..=e].iter().all(|l| l.is_none()) {
            for slot in &mut plot_labels[s..=e] {
                *slot = Some(next);
            }
            next += 1;
        }
    }
    let mut out = vec![None; n];
    for (pos, &orig) in ordering.iter().enumerate() {
        out[orig] = plot_labels[pos];
    }
    out
}
