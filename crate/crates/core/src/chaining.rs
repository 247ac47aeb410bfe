//! Entropy numbers, Dudley sums and sample-count formulas.

use std::io::{Read, Write};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::phi::{r_constant, PhiFunction};
use crate::subspace::Subspace;

/// `N_n`: one ball at level zero, `2^{2^n}` balls afterwards.
pub fn covering_count(n: usize) -> usize {
    if n == 0 {
        1
    } else {
        1usize.checked_shl(1 << n).unwrap_or(usize::MAX)
    }
}

/// Estimated entropy numbers `e_0, …, e_nmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub e: Vec<f64>,
    pub metric: String,
    pub set: String,
    /// Cardinality of the net the covering radii are certified on.
    pub net_size: usize,
}

impl EntropyProfile {
    pub fn new(e: Vec<f64>) -> Self {
        EntropyProfile {
            e,
            metric: String::new(),
            set: String::new(),
            net_size: 0,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.e.windows(2).all(|w| w[0] >= w[1] - 1e-12)
    }

    /// CSV with columns `n, e_n`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "e_n"])?;
        for (n, e) in self.e.iter().enumerate() {
            w.write_record([n.to_string(), format!("{e:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            n: usize,
            e_n: f64,
        }
        let mut r = csv::Reader::from_reader(input);
        let mut e = Vec::new();
        for (i, row) in r.deserialize::<Row>().enumerate() {
            let row = row?;
            if row.n != i {
                return Err(Error::InvalidArgument(format!("profile row {i} has n = {}", row.n)));
            }
            e.push(row.e_n);
        }
        Ok(EntropyProfile::new(e))
    }
}

fn sup_dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Index and radius of the member of `idx` minimizing the farthest distance to `idx`.
fn one_center(net: &[Vec<Complex64>], idx: &[usize]) -> (usize, f64) {
    let mut best = (idx[0], f64::INFINITY);
    for &c in idx {
        let mut r = 0.0_f64;
        for &j in idx {
            r = r.max(sup_dist(&net[c], &net[j]));
            if r >= best.1 {
                break;
            }
        }
        if r < best.1 {
            best = (c, r);
        }
    }
    best
}

/// Covering radius of `net` by balls at `centers`, plus the nearest-center assignment.
fn assign(net: &[Vec<Complex64>], centers: &[usize]) -> (f64, Vec<usize>) {
    let mut owner = vec![0; net.len()];
    let mut radius = 0.0_f64;
    for (j, x) in net.iter().enumerate() {
        let (mut bi, mut bd) = (0, f64::INFINITY);
        for (i, &c) in centers.iter().enumerate() {
            let d = sup_dist(x, &net[c]);
            if d < bd {
                bi = i;
                bd = d;
            }
        }
        owner[j] = bi;
        radius = radius.max(bd);
    }
    (radius, owner)
}

/// Greedy `k`-center covering of a finite net under the sup metric.
///
/// Farthest-first traversal from the net's 1-center, then cluster re-centering
/// until the centers settle, then a bisection over greedy set covers on
/// moderate nets. Returns the smallest covering radius seen.
pub fn greedy_cover(net: &[Vec<Complex64>], k: usize) -> f64 {
    if k >= net.len() {
        return 0.0;
    }
    let all: Vec<usize> = (0..net.len()).collect();
    let (c0, r0) = one_center(net, &all);
    if k == 1 {
        return r0;
    }
    let mut centers = vec![c0];
    let mut dist: Vec<f64> = net.iter().map(|x| sup_dist(x, &net[c0])).collect();
    while centers.len() < k {
        let (far, _) = dist
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (j, &d)| if d > acc.1 { (j, d) } else { acc });
        centers.push(far);
        for (j, x) in net.iter().enumerate() {
            dist[j] = dist[j].min(sup_dist(x, &net[far]));
        }
    }
    let (mut best, mut owner) = assign(net, &centers);
    for _ in 0..500 {
        let next: Vec<usize> = (0..centers.len())
            .map(|i| {
                let members: Vec<usize> = (0..net.len()).filter(|&j| owner[j] == i).collect();
                if members.is_empty() {
                    centers[i]
                } else {
                    one_center(net, &members).0
                }
            })
            .collect();
        if next == centers {
            break;
        }
        let (r, o) = assign(net, &next);
        best = best.min(r);
        owner = o;
        centers = next;
    }
    if net.len() <= SET_COVER_LIMIT {
        best = best.min(set_cover_radius(net, k, best));
    }
    best
}

/// Largest net for which the quadratic-memory set-cover pass runs.
const SET_COVER_LIMIT: usize = 3000;

/// Centers chosen by greedy set cover with balls of radius `r`, if at most `k` suffice.
fn set_cover_at(d: &[Vec<f64>], k: usize, r: f64) -> Option<Vec<usize>> {
    let n = d.len();
    let mut count: Vec<usize> = d.iter().map(|row| row.iter().filter(|&&v| v <= r).count()).collect();
    let mut covered = vec![false; n];
    let mut left = n;
    let mut centers = Vec::with_capacity(k);
    while left > 0 {
        if centers.len() == k {
            return None;
        }
        let c = (0..n).fold(0, |b, i| if count[i] > count[b] { i } else { b });
        centers.push(c);
        for j in 0..n {
            if !covered[j] && d[c][j] <= r {
                covered[j] = true;
                left -= 1;
                for (i, row) in d.iter().enumerate() {
                    if row[j] <= r {
                        count[i] -= 1;
                    }
                }
            }
        }
    }
    Some(centers)
}

/// Bisection on the radius for which greedy set cover needs at most `k` balls.
fn set_cover_radius(net: &[Vec<Complex64>], k: usize, upper: f64) -> f64 {
    let d: Vec<Vec<f64>> = net.iter().map(|x| net.iter().map(|y| sup_dist(x, y)).collect()).collect();
    let (mut lo, mut hi) = (0.0, upper);
    let mut best = upper;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match set_cover_at(&d, k, mid) {
            Some(c) => {
                best = best.min(assign(net, &c).0);
                hi = mid;
            }
            None => lo = mid,
        }
        if hi - lo <= 1e-9 * upper {
            break;
        }
    }
    best
}

/// Covering-radius profile of a finite net.
pub fn entropy_numbers_of_net(net: &[Vec<Complex64>], nmax: usize) -> Result<EntropyProfile> {
    if net.is_empty() {
        return Err(Error::NetTooSmall("empty net".into()));
    }
    let diameter_zero = net.iter().all(|x| sup_dist(x, &net[0]) == 0.0);
    if !diameter_zero && net.len() <= covering_count(nmax) {
        return Err(Error::NetTooSmall(format!(
            "{} points cannot certify level {nmax} ({} balls)",
            net.len(),
            covering_count(nmax)
        )));
    }
    let mut e: Vec<f64> = Vec::with_capacity(nmax + 1);
    for n in 0..=nmax {
        let r = if diameter_zero { 0.0 } else { greedy_cover(net, covering_count(n)) };
        e.push(e.last().map_or(r, |&prev: &f64| prev.min(r)));
    }
    Ok(EntropyProfile {
        e,
        metric: "sup".into(),
        set: "net".into(),
        net_size: net.len(),
    })
}

/// Random points of the unit `L²` ball of `X` (coefficients in the ONB), evaluated at grid indices `points`.
pub fn ball_net<R: Rng>(x: &Subspace, points: &[usize], net_size: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    let n = x.dim();
    let real = x.is_real();
    let rows = x.rows(points);
    let dim = if real { n } else { 2 * n } as f64;
    (0..net_size)
        .map(|_| {
            let mut c: Vec<Complex64> = (0..n)
                .map(|_| {
                    let re = rng.sample::<f64, _>(StandardNormal);
                    let im = if real { 0.0 } else { rng.sample::<f64, _>(StandardNormal) };
                    Complex64::new(re, im)
                })
                .collect();
            let norm = c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let radius = rng.random::<f64>().powf(dim.recip());
            for v in &mut c {
                *v *= radius / norm;
            }
            (&rows * DVector::from_vec(c)).iter().cloned().collect()
        })
        .collect()
}

/// Entropy numbers of the unit `L²` ball of `X` in the sup metric over grid indices `points`.
pub fn entropy_numbers<R: Rng>(
    x: &Subspace,
    points: &[usize],
    nmax: usize,
    net_size: usize,
    rng: &mut R,
) -> Result<EntropyProfile> {
    let net = ball_net(x, points, net_size, rng);
    let mut prof = entropy_numbers_of_net(&net, nmax)?;
    prof.metric = format!("sup over {} points", points.len());
    prof.set = format!("unit L2 ball, N = {}", x.dim());
    Ok(prof)
}

/// `Σ_{n ≤ nmax} 2^{n/2} e_n`.
pub fn dudley_sum(profile: &EntropyProfile) -> f64 {
    profile
        .e
        .iter()
        .enumerate()
        .map(|(n, e)| 2f64.powf(n as f64 / 2.0) * e)
        .sum()
}

/// `A` together with `c(A + A^{1/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AFunctional {
    pub a: f64,
    pub bound: f64,
}

/// `A = (1/m) q² a_Φ(p*) Φ(R_Φ(p*) H^{2/p*}) / H² · dudley²` with `p* = min(p, 2)`.
pub fn a_functional(phi: &PhiFunction, p: f64, q: f64, h: f64, dudley: f64, m: usize, c: f64) -> Result<AFunctional> {
    if !(h >= 1.0) || m == 0 {
        return Err(Error::InvalidArgument(format!("A-functional needs H ≥ 1 and m ≥ 1 (H = {h}, m = {m})")));
    }
    let ps = p.min(2.0);
    let r = r_constant(phi, ps)?;
    let a = q * q * phi.a_lower * phi.eval(r * h.powf(2.0 / ps)) / (h * h) * dudley * dudley / m as f64;
    Ok(AFunctional {
        a,
        bound: c * (a + a.sqrt()),
    })
}

/// `c₂ H 2^{−n/2} (log m)^{1/2}`.
pub fn sudakov_entropy_bound(h: f64, m: usize, n: usize, c2: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument("Sudakov-type bound needs m ≥ 2".into()));
    }
    Ok(c2 * h * 2f64.powf(-(n as f64) / 2.0) * (m as f64).log2().sqrt())
}

fn check_eps_h(eps: f64, h: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must lie in (0, 1/2]")));
    }
    if !(h >= 1.0) {
        return Err(Error::InvalidArgument(format!("H = {h} must be at least 1")));
    }
    Ok(())
}

fn ceil_count(v: f64) -> Result<u64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidArgument(format!("sample count {v} is not finite")));
    }
    // shave rounding noise before the ceiling
    Ok((v * (1.0 - 1e-14)).ceil().max(1.0) as u64)
}

/// Sufficient number of i.i.d. points for a two-sided `(1 ± ε)` discretization.
///
/// `p = 1` uses the `Φ(H²)` form; a positive `t*` selects the large-argument form with
/// inner constant `1`; otherwise the `(aInc)_p ∩ (Dec)` form.
pub fn sufficient_m(phi: &PhiFunction, p: f64, n: usize, h: f64, eps: f64, c_user: f64) -> Result<u64> {
    if phi.t_star > 0.0 && p > 1.0 {
        return sufficient_m_tail(phi, p, n, h, c_user, 1.0);
    }
    check_eps_h(eps, h)?;
    let log_n = (2.0 * n as f64).log2();
    let log_h = (2.0 * h * h).log2();
    let inv = (1.0 / eps).log2();
    let v = if p == 1.0 {
        c_user * eps.powi(-2) * inv * phi.eval(h * h) * log_n * log_n * log_h
    } else if p > 1.0 {
        let ps = p.min(2.0);
        c_user * eps.powi(-2) * inv.powf(ps / 2.0) * phi.eval(h.powf(2.0 / ps)) * log_n * log_n * log_h
    } else {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    };
    ceil_count(v)
}

/// `C Φ(c H^{2/min(p,2)}) (log 2N)² log 2H²` for generators controlled only at infinity.
pub fn sufficient_m_tail(phi: &PhiFunction, p: f64, n: usize, h: f64, c_user: f64, c: f64) -> Result<u64> {
    if !(h >= 1.0) {
        return Err(Error::InvalidArgument(format!("H = {h} must be at least 1")));
    }
    let log_n = (2.0 * n as f64).log2();
    let v = c_user * phi.eval(c * h.powf(2.0 / p.min(2.0))) * log_n * log_n * (2.0 * h * h).log2();
    ceil_count(v)
}

/// `C ε^{−2}(log ε^{−1})^{min(p,2)/2} (BN)^{p/min(p,2)} (log 2BN)^{α+1} (log 2N)²` for `Φ_{p,α,β}`.
pub fn sufficient_m_family(p: f64, alpha: f64, b: f64, n: usize, eps: f64, c_user: f64) -> Result<u64> {
    check_eps_h(eps, b)?;
    let ps = p.min(2.0);
    let bn = b * n as f64;
    let log_n = (2.0 * n as f64).log2();
    let v = c_user
        * eps.powi(-2)
        * (1.0 / eps).log2().powf(ps / 2.0)
        * bn.powf(p / ps)
        * (2.0 * bn).log2().powf(alpha + 1.0)
        * log_n
        * log_n;
    ceil_count(v)
}

/// Both sides of the tail inequality for entropy numbers and the explicit constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub split: usize,
    pub head: f64,
    pub tail: f64,
    /// `tail / head` (zero when both vanish).
    pub implied: f64,
    pub constant: f64,
    pub holds: bool,
}

/// `6^b c(a,b) 2^{ab}` with `c(a,b) = 2 max(2^{ab−1}, 1) (N/(b ln 2))^{ab} Γ(ab) / N^{ab}`.
pub fn tail_constant(a: f64, b: f64, n: usize) -> f64 {
    let ab = a * b;
    let nf = n as f64;
    let c = 2.0 * 2f64.powf(ab - 1.0).max(1.0) * (nf / (b * std::f64::consts::LN_2)).powf(ab) * gamma(ab) / nf.powf(ab);
    6f64.powf(b) * c * 2f64.powf(ab)
}

/// Compares `Σ_{n > [log N]} (2^{an} e_n)^b` against `Σ_{n ≤ [log N]} (2^{an} e_n)^b`.
pub fn tail_inequality_check(profile: &EntropyProfile, a: f64, b: f64, n: usize) -> Result<TailReport> {
    if n == 0 || !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument("tail check needs N ≥ 1 and a, b > 0".into()));
    }
    let split = (n as f64).log2().floor() as usize;
    if profile.e.len() <= split + 1 {
        return Err(Error::InvalidArgument(format!(
            "profile has {} levels, needs more than {}",
            profile.e.len(),
            split + 1
        )));
    }
    let term = |k: usize| (2f64.powf(a * k as f64) * profile.e[k]).powf(b);
    let head: f64 = (0..=split).map(term).sum();
    let tail: f64 = (split + 1..profile.e.len()).map(term).sum();
    let constant = tail_constant(a, b, n);
    let implied = if head > 0.0 { tail / head } else if tail > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(TailReport {
        split,
        head,
        tail,
        implied,
        constant,
        holds: tail <= constant * head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DiscreteMeasure;
    use crate::subspace::{make_monomial_space, make_trig_space, symmetric_range};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interval_net(n: usize) -> Vec<Vec<Complex64>> {
        (0..n).map(|i| vec![Complex64::new(i as f64 / (n - 1) as f64, 0.0)]).collect()
    }

    #[test]
    fn singleton_and_interval() {
        let single = vec![vec![Complex64::new(2.0, 1.0)]];
        let prof = entropy_numbers_of_net(&single, 3).unwrap();
        assert!(prof.e.iter().all(|&e| e == 0.0));

        let prof = entropy_numbers_of_net(&interval_net(801), 1).unwrap();
        assert_relative_eq!(prof.e[0], 0.5);
        assert!((prof.e[1] - 0.125).abs() < 2e-3, "e_1 = {}", prof.e[1]);
        assert!(matches!(entropy_numbers_of_net(&interval_net(4), 1), Err(Error::NetTooSmall(_))));
    }

    #[test]
    fn greedy_within_factor_two_of_exhaustive() {
        let grid = DiscreteMeasure::interval_grid(16, -1.0, 1.0).unwrap();
        let x = make_monomial_space(2, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<usize> = (0..16).collect();
        let net = ball_net(&x, &points, 24, &mut rng);
        let prof = entropy_numbers_of_net(&net, 1).unwrap();
        let mut best = f64::INFINITY;
        let n = net.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        best = best.min(assign(&net, &[a, b, c, d]).0);
                    }
                }
            }
        }
        let exact0 = one_center(&net, &(0..n).collect::<Vec<_>>()).1;
        assert_relative_eq!(prof.e[0], exact0);
        assert!(prof.e[1] >= best - 1e-12);
        assert!(prof.e[1] <= 2.0 * best);
    }

    #[test]
    fn trig_profile_is_monotone_and_below_sudakov() {
        let grid = DiscreteMeasure::torus_grid(32, 1).unwrap();
        let x = make_trig_space(&symmetric_range(2), &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points: Vec<usize> = (0..32).step_by(2).collect();
        let prof = entropy_numbers(&x, &points, 2, 400, &mut rng).unwrap();
        assert!(prof.is_monotone());
        let h = x.nikolskii_constant();
        for (n, &e) in prof.e.iter().enumerate() {
            assert!(e <= sudakov_entropy_bound(h, points.len(), n, 10.0).unwrap());
        }
    }

    #[test]
    fn dudley_values() {
        assert_eq!(dudley_sum(&EntropyProfile::new(vec![0.0; 5])), 0.0);
        let geo = EntropyProfile::new((0..=20).map(|n| 2f64.powi(-n)).collect());
        let limit = 1.0 / (1.0 - 2f64.powf(-0.5));
        assert!((dudley_sum(&geo) - limit).abs() < 1e-3 * limit);
        let prof = EntropyProfile::new(vec![1.0, 0.4, 0.1]);
        assert_relative_eq!(dudley_sum(&prof), 1.0 + 0.4 * 2f64.sqrt() + 0.2);
    }

    #[test]
    fn a_functional_values() {
        let sq = PhiFunction::power(2.0).unwrap();
        let z = a_functional(&sq, 2.0, 2.0, 3.0, 0.0, 10, 1.0).unwrap();
        assert_eq!(z.a, 0.0);
        let v = a_functional(&sq, 2.0, 2.0, 3.0, 1.5, 10, 1.0).unwrap();
        assert_relative_eq!(v.a, 8.0 * 2.25 / 10.0, max_relative = 1e-12);
        assert_relative_eq!(v.bound, v.a + v.a.sqrt());
        let w = a_functional(&sq, 2.0, 2.0, 3.0, 1.5, 20, 1.0).unwrap();
        assert_relative_eq!(w.a, v.a / 2.0, max_relative = 1e-12);
        assert!(a_functional(&sq, 2.0, 2.0, 0.5, 1.0, 10, 1.0).is_err());
    }

    #[test]
    fn sudakov_values() {
        assert_relative_eq!(sudakov_entropy_bound(1.0, 2, 0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(
            sudakov_entropy_bound(3.0, 16, 2, 1.0).unwrap(),
            3.0 * sudakov_entropy_bound(1.0, 16, 2, 1.0).unwrap()
        );
        assert!(sudakov_entropy_bound(1.0, 1, 0, 1.0).is_err());
    }

    #[test]
    fn sample_count_for_the_square() {
        let sq = PhiFunction::power(2.0).unwrap();
        assert_eq!(sufficient_m(&sq, 2.0, 16, 4.0, 0.5, 1.0).unwrap(), 8000);
        assert_eq!(sufficient_m_family(2.0, 0.0, 1.0, 16, 0.5, 1.0).unwrap(), 8000);
        assert!(sufficient_m(&sq, 2.0, 16, 4.0, 0.6, 1.0).is_err());
        assert!(sufficient_m(&sq, 2.0, 16, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn sample_count_for_p_one() {
        let lin = PhiFunction::power(1.0).unwrap();
        // ε^{-2} log ε^{-1} Φ(H²) (log 2N)² log 2H² = 4·1·16·25·5
        assert_eq!(sufficient_m(&lin, 1.0, 16, 4.0, 0.5, 1.0).unwrap(), 8000);
    }

    #[test]
    fn tail_check_values() {
        let zero = EntropyProfile::new(vec![0.0; 6]);
        let r = tail_inequality_check(&zero, 1.0, 1.0, 4).unwrap();
        assert_eq!((r.head, r.tail), (0.0, 0.0));
        assert!(r.holds);

        let prof = EntropyProfile::new((0..8).map(|n| 2f64.powi(-2 * n)).collect());
        let r = tail_inequality_check(&prof, 1.0, 1.0, 4).unwrap();
        assert_eq!(r.split, 2);
        let head: f64 = (0..=2).map(|n| 2f64.powi(n) * 2f64.powi(-2 * n)).sum();
        let tail: f64 = (3..8).map(|n| 2f64.powi(n) * 2f64.powi(-2 * n)).sum();
        assert_relative_eq!(r.head, head);
        assert_relative_eq!(r.tail, tail);
        assert!(r.holds);
        let c = 2.0 * (4.0 / std::f64::consts::LN_2) * 1.0 / 4.0;
        assert_relative_eq!(r.constant, 6.0 * c * 2.0, max_relative = 1e-12);
    }

    #[test]
    fn profile_csv_round_trip() {
        let prof = EntropyProfile::new(vec![1.0, 0.25, 1.0 / 3.0]);
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        assert_eq!(EntropyProfile::read_csv(buf.as_slice()).unwrap().e, prof.e);
    }

    proptest! {
        #[test]
        fn dudley_dominates_each_term(e in proptest::collection::vec(0.0f64..10.0, 1..10)) {
            let prof = EntropyProfile::new(e);
            let s = dudley_sum(&prof);
            for (n, v) in prof.e.iter().enumerate() {
                prop_assert!(s >= 2f64.powf(n as f64 / 2.0) * v - 1e-12);
            }
        }

        #[test]
        fn sufficient_m_monotone(eps in 0.01f64..0.5, n in 1usize..64, h in 1.0f64..10.0, c in 0.1f64..10.0) {
            let phi = PhiFunction::pab(2.0, 1.0, 0.0).unwrap();
            let base = sufficient_m(&phi, 2.0, n, h, eps, c).unwrap();
            prop_assert!(sufficient_m(&phi, 2.0, n, h, (eps * 1.1).min(0.5), c).unwrap() <= base);
            prop_assert!(sufficient_m(&phi, 2.0, n + 1, h, eps, c).unwrap() >= base);
            prop_assert!(sufficient_m(&phi, 2.0, n, h * 1.1, eps, c).unwrap() >= base);
            prop_assert!(sufficient_m(&phi, 2.0, n, h, eps, c * 1.1).unwrap() >= base);
        }
    }
}
