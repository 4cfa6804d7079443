use super::{Matrix, State};

fn step_for(x: &State, rel: f64) -> f64 {
    rel * (1.0 + x.norm())
}

pub(super) fn gradient(f: &dyn Fn(&State) -> f64, x: &State, rel: f64) -> State {
    let h = step_for(x, rel);
    let mut probe = x.clone();
    State::from_fn(x.len(), |i, _| {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        (up - down) / (2.0 * h)
    })
}

pub(super) fn jacobian(f: &dyn Fn(&State) -> State, x: &State, rows: usize, rel: f64) -> Matrix {
    let h = step_for(x, rel);
    let mut probe = x.clone();
    let mut jac = Matrix::zeros(rows, x.len());
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let up = f(&probe);
        probe[j] = x[j] - h;
        let down = f(&probe);
        probe[j] = x[j];
        jac.set_column(j, &((up - down) / (2.0 * h)));
    }
    jac
}

pub(super) fn hessian_from_gradient(g: &dyn Fn(&State) -> State, x: &State, rel: f64) -> Matrix {
    let h = jacobian(g, x, x.len(), rel);
    (&h + h.transpose()) * 0.5
}

pub(super) fn hessian(f: &dyn Fn(&State) -> f64, x: &State, rel: f64) -> Matrix {
    let n = x.len();
    let h = step_for(x, rel);
    let f0 = f(x);
    let mut probe = x.clone();
    let eval = |probe: &mut State, di: (usize, f64), dj: Option<(usize, f64)>| {
        probe[di.0] += di.1;
        if let Some((j, d)) = dj {
            probe[j] += d;
        }
        let v = f(probe);
        probe[di.0] -= di.1;
        if let Some((j, d)) = dj {
            probe[j] -= d;
        }
        v
    };
    let mut hess = Matrix::zeros(n, n);
    for i in 0..n {
        let up = eval(&mut probe, (i, h), None);
        let down = eval(&mut probe, (i, -h), None);
        hess[(i, i)] = (up - 2.0 * f0 + down) / (h * h);
        for j in (i + 1)..n {
            let pp = eval(&mut probe, (i, h), Some((j, h)));
            let pm = eval(&mut probe, (i, h), Some((j, -h)));
            let mp = eval(&mut probe, (i, -h), Some((j, h)));
            let mm = eval(&mut probe, (i, -h), Some((j, -h)));
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}
