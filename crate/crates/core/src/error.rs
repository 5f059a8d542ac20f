use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    /// The QoS targets cannot be met; `users` are the ones whose target is
    /// still violated at the least-infeasible point.
    #[error("QoS targets infeasible for users {users:?}")]
    InfeasibleQos { users: Vec<usize> },
    #[error("conic solver failed in the {stage} subproblem: {message}")]
    Solver {
        stage: &'static str,
        message: String,
        /// Problem dump for offline inspection.
        dump: String,
    },
    #[error(transparent)]
    Problem(#[from] conic::ProblemError),
}
