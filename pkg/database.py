import json
import logging
from datetime import datetime

from sqlalchemy import Column, DateTime, Float, Integer, String, Text, create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

logger = logging.getLogger(__name__)

# Create a base class for declarative class definitions
Base = declarative_base()

_engines = {}


# Create run table model
class RunRecord(Base):
    __tablename__ = 'runs'

    id = Column(Integer, primary_key=True)
    timestamp = Column(DateTime, default=datetime.now)
    command = Column(String(50))
    seed = Column(Integer, nullable=True)
    tol = Column(Float, nullable=True)
    exit_code = Column(Integer)
    summary_json = Column(Text)
    config_json = Column(Text)

    def __repr__(self):
        return f"<RunRecord(id={self.id}, command={self.command}, exit_code={self.exit_code})>"


# Create instance table model
class InstanceRecord(Base):
    __tablename__ = 'instances'

    id = Column(Integer, primary_key=True)
    timestamp = Column(DateTime, default=datetime.now)
    kind = Column(String(20))
    seed = Column(Integer, nullable=True)
    n = Column(Integer)
    g_tilde = Column(Integer)
    instance_json = Column(Text)

    def __repr__(self):
        return f"<InstanceRecord(id={self.id}, kind={self.kind}, n={self.n}, g_tilde={self.g_tilde})>"


# Create configuration table model
class Configuration(Base):
    __tablename__ = 'configurations'

    id = Column(Integer, primary_key=True)
    name = Column(String(100), unique=True)
    created_at = Column(DateTime, default=datetime.now)
    updated_at = Column(DateTime, default=datetime.now, onupdate=datetime.now)
    config_json = Column(Text)

    def __repr__(self):
        return f"<Configuration(id={self.id}, name={self.name})>"


def get_engine(database_url):
    """
    SQLAlchemy engine for a database URL, cached per URL

    Args:
        database_url (str): Any SQLAlchemy URL, e.g. sqlite:///runs.db

    Returns:
        sqlalchemy.engine.Engine: Engine with the tables created
    """
    if not database_url:
        raise ValueError("No database URL given")
    if database_url not in _engines:
        engine = create_engine(database_url)
        Base.metadata.create_all(engine)
        _engines[database_url] = engine
    return _engines[database_url]


def init_db(database_url):
    # Create a session factory
    Session = sessionmaker(bind=get_engine(database_url), expire_on_commit=False)
    return Session()


def save_run(run_data, database_url):
    """
    Save a CLI run to the database

    Args:
        run_data (dict): command, seed, tol, exit_code, summary, config
        database_url (str): SQLAlchemy URL

    Returns:
        RunRecord: The saved record
    """
    session = init_db(database_url)

    try:
        run = RunRecord(
            command=run_data.get('command'),
            seed=run_data.get('seed'),
            tol=run_data.get('tol'),
            exit_code=run_data.get('exit_code'),
            summary_json=json.dumps(run_data.get('summary', {}), default=str),
            config_json=json.dumps(run_data.get('config', {}), default=str),
        )
        session.add(run)
        session.commit()
        return run

    except Exception as e:
        session.rollback()
        logger.error("Error saving run to database: %s", e)
        raise

    finally:
        session.close()


def get_runs(database_url, limit=100, command=None):
    """
    Get recorded runs, newest first

    Args:
        database_url (str): SQLAlchemy URL
        limit (int): Maximum number of runs to return
        command (str): Only runs of this command

    Returns:
        list: List of RunRecord objects
    """
    session = init_db(database_url)

    try:
        query = session.query(RunRecord)
        if command:
            query = query.filter(RunRecord.command == command)
        return query.order_by(RunRecord.id.desc()).limit(limit).all()

    finally:
        session.close()


def save_instance(instance, database_url):
    """
    Save a generated instance file

    Args:
        instance (dict): Instance JSON as written by instance_to_json
        database_url (str): SQLAlchemy URL

    Returns:
        InstanceRecord: The saved record
    """
    session = init_db(database_url)

    try:
        p = instance.get('p', [])
        record = InstanceRecord(
            kind=instance.get('kind'),
            seed=instance.get('seed'),
            n=len(p[0]) if p else 0,
            g_tilde=len(p),
            instance_json=json.dumps(instance),
        )
        session.add(record)
        session.commit()
        return record

    except Exception as e:
        session.rollback()
        logger.error("Error saving instance to database: %s", e)
        raise

    finally:
        session.close()


def get_instances(database_url, limit=100, kind=None):
    """
    Get stored instances as JSON objects, newest first

    Args:
        database_url (str): SQLAlchemy URL
        limit (int): Maximum number of instances to return
        kind (str): Only instances of this kind

    Returns:
        list: Instance dicts
    """
    session = init_db(database_url)

    try:
        query = session.query(InstanceRecord)
        if kind:
            query = query.filter(InstanceRecord.kind == kind)
        return [json.loads(r.instance_json) for r in query.order_by(InstanceRecord.id.desc()).limit(limit)]

    finally:
        session.close()


def save_configuration(config_data, name="default", database_url=None):
    """
    Save a configuration to the database

    Args:
        config_data (dict): Configuration data dictionary
        name (str): Configuration name
        database_url (str): SQLAlchemy URL

    Returns:
        Configuration: The saved Configuration object
    """
    session = init_db(database_url)

    try:
        config = session.query(Configuration).filter_by(name=name).first()
        if config:
            config.updated_at = datetime.now()
            config.config_json = json.dumps(config_data)
        else:
            config = Configuration(name=name, config_json=json.dumps(config_data))

        session.add(config)
        session.commit()
        return config

    except Exception as e:
        session.rollback()
        logger.error("Error saving configuration to database: %s", e)
        raise

    finally:
        session.close()


def get_configuration(name="default", database_url=None):
    """
    Get a configuration from the database

    Args:
        name (str): Configuration name
        database_url (str): SQLAlchemy URL

    Returns:
        dict: Configuration data dictionary, or None
    """
    session = init_db(database_url)

    try:
        config = session.query(Configuration).filter_by(name=name).first()
        if config and config.config_json:
            return json.loads(config.config_json)
        return None

    finally:
        session.close()
