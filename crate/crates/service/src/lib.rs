//! HTTP service: availability reports, rescue point and shelter edits,
//! recommendation rounds and plan acceptance, over one crisis.

mod error;
mod routes;
mod state;

use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;

use evacrec_core::knowledge::KnowledgeBase;
use evacrec_core::scenario::{Scenario, ScenarioError};
use tokio::net::TcpListener;

pub use error::{ApiError, ErrorBody};
pub use routes::router;
pub use state::{
    AppState, AvailabilityReport, PlanRecord, PlanState, RescuePointUpdate, ShelterUpdate, SolverPermit,
    StateView,
};

#[derive(clap::Args, Clone, Debug)]
pub struct ServeArgs {
    /// Port to listen on; 0 picks a free one.
    #[arg(long, env = "EVACREC_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub host: IpAddr,
    /// Scenario file holding the initial knowledge base.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Road graph to use instead of the one named by the scenario.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Largest fleet solved exactly; bigger fleets get the greedy plan.
    #[arg(long)]
    pub exact_bound: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("knowledge base: {0}")]
    Knowledge(#[from] evacrec_core::knowledge::KnowledgeError),
    #[error("cannot listen: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads the scenario named by `args` into a fresh server state.
pub fn load_state(args: &ServeArgs) -> Result<AppState, StartError> {
    let scenario = Scenario::load_with_graph(&args.scenario, args.graph.as_ref())?;
    let mut settings = *scenario.settings();
    if let Some(bound) = args.exact_bound {
        settings.exact_bound = bound;
    }
    let kb = KnowledgeBase::from_snapshot(scenario.file.knowledge.clone())?;
    Ok(AppState::new(kb, scenario.graph, settings))
}

/// Binds the listener and serves until interrupted. The bound address is
/// printed on standard output first, so callers asking for port 0 can find it.
pub async fn run(args: ServeArgs) -> Result<(), StartError> {
    let state = load_state(&args)?;
    let listener = TcpListener::bind(SocketAddr::new(args.host, args.port)).await?;
    let addr = listener.local_addr()?;
    println!("listening on http://{addr}");
    std::io::stdout().flush()?;
    tracing::info!(%addr, "service started");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
