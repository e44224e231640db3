from ..core import Timestamp
from ..store.bank import MemoryBank
from ..store.memory import Rsam
from ..utils import SECONDS_PER_DAY


def is_due(rsam: Rsam, now: Timestamp) -> bool:
    '''
    Whether a memory may resurface at ``now``: never once dismissed or before it was created, always
    if it has not been recalled yet, otherwise only after its recall interval has fully elapsed.
    '''
    if rsam.dismissed or now < rsam.created_at:
        return False
    if rsam.last_recalled_at is None:
        return True
    return (now - rsam.last_recalled_at) >= rsam.recall_interval_days * SECONDS_PER_DAY


def set_interval(bank: MemoryBank, memory_id: int, days: float) -> None:
    ''' Adjust how often one memory may resurface, in days '''
    bank.set_interval(memory_id, days)
