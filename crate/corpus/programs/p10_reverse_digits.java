public class ReverseDigits {
    public static int main(String[] args) {
        int num = 1204;
        int reversed = 0;
        int digits = 0;
        do {
            int d = num % 10;
            reversed = reversed * 10 + d;
            num /= 10;
            digits++;
        } while (num > 0);
        return reversed;
    }
}
