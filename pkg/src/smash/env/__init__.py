from .bus import Bus, BusMessage, Subscription, TopicError, check_pattern, check_topic, topic_matches
from .devices import (
    PC,
    TV,
    Device,
    Phone,
    PropertyChange,
    Sofa,
    WeightClassifier,
    device_step,
    make_device,
)
from .environment import CONTEXT, Environment, goals_topic, operations_topic, property_topic, signals_topic
from .store import ContextStore, from_triple, to_triple
from .tcp import BusClient, BusServer

__all__ = [
    "Bus",
    "BusClient",
    "BusMessage",
    "BusServer",
    "CONTEXT",
    "ContextStore",
    "Device",
    "Environment",
    "PC",
    "Phone",
    "PropertyChange",
    "Sofa",
    "Subscription",
    "TV",
    "TopicError",
    "WeightClassifier",
    "check_pattern",
    "check_topic",
    "device_step",
    "from_triple",
    "goals_topic",
    "make_device",
    "operations_topic",
    "property_topic",
    "signals_topic",
    "to_triple",
    "topic_matches",
]
